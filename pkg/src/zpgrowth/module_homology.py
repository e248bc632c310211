"""Finite-level checks for cyclic Lambda-modules.

The level-n quotient (Z/p^m)[X, Y]/(omega_n(X), omega_n(Y)) is the group
ring of Z/p^n x Z/p^n over Z/p^m, with X = sigma - 1 and Y = tau - 1.  Elements
are stored in the group basis sigma^i tau^j as integer arrays, which makes
f_{a,b} = sigma^a tau^b - 1 exact at every level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from math import comb

import numpy as np

from .padic import Direction, PadicNumber, PrecisionError
from .series import PowerSeries2, PrecisionPolicy, f_ab, project
from .weierstrass import mu_lambda

SIZE_CAP = 4096


class SizeCapExceeded(ValueError):
    pass


# -- generators ----------------------------------------------------------------


@dataclass(frozen=True)
class Poly:
    """Bivariate polynomial over Z_p with integer coefficients {(i, j): c}."""

    terms: tuple  # sorted ((i, j), c) pairs, c != 0

    @classmethod
    def of(cls, mapping: dict) -> Poly:
        return cls(tuple(sorted((k, c) for k, c in mapping.items() if c)))

    @classmethod
    def X(cls) -> Poly:
        return cls.of({(1, 0): 1})

    @classmethod
    def Y(cls) -> Poly:
        return cls.of({(0, 1): 1})

    @classmethod
    def const(cls, c: int) -> Poly:
        return cls.of({(0, 0): c})

    def variables(self) -> set:
        out = set()
        for (i, j), _ in self.terms:
            if i:
                out.add("X")
            if j:
                out.add("Y")
        return out

    def is_constant(self) -> bool:
        return all(k == (0, 0) for k, _ in self.terms)

    def content_valuation(self, p: int) -> int | None:
        """Minimum p-adic valuation of the coefficients (None for 0)."""
        vals = []
        for _, c in self.terms:
            v = 0
            while c % p == 0:
                c //= p
                v += 1
            vals.append(v)
        return min(vals) if vals else None

    def series(self, p: int, policy: PrecisionPolicy) -> PowerSeries2:
        coeffs = {}
        for k, c in self.terms:
            if sum(k) >= policy.degree_bound:
                raise ValueError("polynomial degree exceeds the series degree bound")
            coeffs[k] = PadicNumber._normalize(p, c, 0, policy.coeff_prec)
        return PowerSeries2(p, policy, coeffs)

    def level_element(self, ring: FiniteLevelRing) -> np.ndarray:
        return ring.from_poly(dict(self.terms))


@dataclass(frozen=True, eq=False)
class Fab:
    """The generator f_{a,b} = (1+X)^a (1+Y)^b - 1 of a direction."""

    direction: Direction

    def series(self, p: int, policy: PrecisionPolicy) -> PowerSeries2:
        return f_ab(self.direction, policy)

    def level_element(self, ring: FiniteLevelRing) -> np.ndarray:
        return ring.f_ab(self.direction)


@dataclass(eq=False)
class CyclicModulePresentation:
    """M = Lambda/(g_1, ..., g_k).

    An empty generator list is accepted only as the free module Lambda
    itself (used as a contrast case by the finite-level oracle).
    """

    prime: int
    generators: list = field(default_factory=list)
    label: str = ""

    def key(self):
        parts = []
        for g in self.generators:
            if isinstance(g, Poly):
                parts.append(("poly", g.terms))
            else:
                d = g.direction
                parts.append(("fab", d.chart.value, _coord_key(d.a), _coord_key(d.b)))
        return (self.prime, tuple(parts))


def _coord_key(x: PadicNumber):
    return (x.valuation, x.unit, x.rel_prec, x.abs_prec)


# -- the finite-level ring -----------------------------------------------------


class FiniteLevelRing:
    """(Z/p^m)[Z/p^n]^nvars in the group basis; nvars is 1 or 2."""

    def __init__(self, p: int, m: int, n: int, nvars: int = 2, size_cap: int = SIZE_CAP):
        if m < 1 or n < 0:
            raise ValueError("need m >= 1 and n >= 0")
        if nvars not in (1, 2):
            raise ValueError("nvars must be 1 or 2")
        self.p, self.m, self.n, self.nvars = p, m, n, nvars
        self.side = p**n
        self.rank = self.side**nvars
        if self.rank > size_cap:
            raise SizeCapExceeded(
                f"level ring has rank {self.rank} > size cap {size_cap}"
            )
        self.mod = p**m
        self.shape = (self.side,) * nvars

    def zero(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=np.int64)

    def one(self) -> np.ndarray:
        e = self.zero()
        e[(0,) * self.nvars] = 1
        return e

    def _var_expansion(self, i: int) -> np.ndarray:
        # (sigma - 1)^i in the cyclic group basis
        out = np.zeros(self.side, dtype=np.int64)
        for k in range(i + 1):
            out[k % self.side] += comb(i, k) * (-1) ** (i - k)
        return out % self.mod

    def from_poly(self, terms: dict) -> np.ndarray:
        """Reduce an integer polynomial in X (and Y) into the ring."""
        acc = self.zero()
        for key, c in terms.items():
            if self.nvars == 1:
                i = key if isinstance(key, int) else key[0]
                if not isinstance(key, int) and key[1]:
                    raise ValueError("univariate ring cannot hold Y terms")
                acc = (acc + c * self._var_expansion(i)) % self.mod
            else:
                i, j = key
                acc = (acc + c * np.outer(self._var_expansion(i),
                                          self._var_expansion(j))) % self.mod
        return acc

    def f_ab(self, direction: Direction) -> np.ndarray:
        if self.nvars != 2:
            raise ValueError("f_ab lives in the two-variable ring")
        a = _exponent_mod(direction.a, self.n)
        b = _exponent_mod(direction.b, self.n)
        e = self.zero()
        e[a % self.side, b % self.side] += 1
        e[0, 0] -= 1
        return e % self.mod

    def mul(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return (self.mult_matrix(u) @ v.reshape(-1)).reshape(self.shape) % self.mod

    def mult_matrix(self, g: np.ndarray) -> np.ndarray:
        """Matrix of x -> g*x on the group basis (column = image of a basis element)."""
        s = self.side
        idx = np.arange(s)
        diff = (idx[:, None] - idx[None, :]) % s  # (k - i) mod s
        if self.nvars == 1:
            return g[diff] % self.mod
        # M[(k,l),(i,j)] = g[(k-i), (l-j)]
        big = g[diff[:, None, :, None], diff[None, :, None, :]]
        return big.reshape(self.rank, self.rank) % self.mod

    def project_to(self, x: np.ndarray, n_low: int) -> np.ndarray:
        """Image under the level map n -> n_low (fold indices mod p^n_low)."""
        if n_low > self.n:
            raise ValueError("can only project to a lower level")
        low = self.p**n_low
        if self.nvars == 1:
            out = np.zeros(low, dtype=np.int64)
            np.add.at(out, np.arange(self.side) % low, x)
        else:
            out = np.zeros((low, low), dtype=np.int64)
            r = np.arange(self.side) % low
            np.add.at(out, (r[:, None], r[None, :]), x)
        return out % self.mod


def _exponent_mod(x: PadicNumber, n: int) -> int:
    if x.is_exact_zero():
        return 0
    try:
        return x.residue(n) if n > 0 else 0
    except PrecisionError:
        raise PrecisionError(f"direction coordinate not known mod p^{n}") from None


def make_finite_level(p: int, m: int, n: int, nvars: int = 2,
                      size_cap: int = SIZE_CAP) -> FiniteLevelRing:
    return FiniteLevelRing(p, m, n, nvars, size_cap)


# -- Smith normal form over Z/p^m ---------------------------------------------


def smith_valuations(a: np.ndarray, p: int, m: int, track: bool = False):
    """Valuations of the Smith diagonal of ``a`` over Z/p^m.

    Pivoting always takes an entry of minimal valuation.  Returns the list
    of pivot valuations (each < m); rows without a pivot are free.  With
    ``track=True`` also returns (U, U_inv) with U a = D V^-1 as row
    transforms on the row space.
    """
    mod = p**m
    rows, cols = np.shape(a)
    if mod * mod * (max(rows, cols) + 1) >= 2**62:
        raise ValueError(f"p^m = {mod} too large for int64 elimination at this size")
    a = np.array(a, dtype=np.int64) % mod
    u = np.eye(rows, dtype=np.int64) if track else None
    u_inv = np.eye(rows, dtype=np.int64) if track else None
    vals = []
    s = 0
    while s < min(rows, cols):
        sub = a[s:, s:]
        if not sub.any():
            break
        pivot = None
        for k in range(m):
            hit = np.argwhere(sub % p ** (k + 1) != 0)
            if len(hit):
                pivot = (k, hit[0][0] + s, hit[0][1] + s)
                break
        k, r, c = pivot
        if r != s:
            a[[s, r]] = a[[r, s]]
            if track:
                u[[s, r]] = u[[r, s]]
                u_inv[:, [s, r]] = u_inv[:, [r, s]]
        if c != s:
            a[:, [s, c]] = a[:, [c, s]]
        unit = int(a[s, s]) // p**k
        inv = pow(unit, -1, mod)
        a[s] = (a[s] * inv) % mod
        if track:
            u[s] = (u[s] * inv) % mod
            u_inv[:, s] = (u_inv[:, s] * unit) % mod
        pk = p**k
        factors = a[s + 1:, s] // pk
        nzr = np.nonzero(factors)[0]
        if len(nzr):
            rows_idx = nzr + s + 1
            f = factors[nzr]
            a[rows_idx, s:] = (a[rows_idx, s:] - np.outer(f, a[s, s:])) % mod
            if track:
                u[rows_idx] = (u[rows_idx] - np.outer(f, u[s])) % mod
                u_inv[:, s] = (u_inv[:, s] + u_inv[:, rows_idx] @ f) % mod
        # column operations only touch row s once the column is cleared
        a[s, s + 1:] = 0
        vals.append(k)
        s += 1
    if track:
        return vals, u, u_inv
    return vals


def cokernel_structure(a: np.ndarray, p: int, m: int) -> list[int]:
    """Exponents e_i with coker(a) = sum Z/p^(e_i) over Z/p^m (rows = ambient)."""
    vals = smith_valuations(a, p, m)
    rows = a.shape[0]
    exps = [v for v in vals if v > 0] + [m] * (rows - len(vals))
    return sorted(exps)


def log_size(exps: list[int]) -> int:
    return sum(exps)


# -- finite modules ------------------------------------------------------------


@dataclass
class FiniteModule:
    """Explicit M_{m,n} = R/(g_1..g_k): cyclic exponents plus the quotient map."""

    ring: FiniteLevelRing
    exponents: list  # e_i for each surviving coordinate
    to_quotient: np.ndarray  # rows of U for surviving coordinates
    lifts: np.ndarray  # columns of U^-1 for surviving coordinates

    def log_size(self) -> int:
        return sum(self.exponents)

    def action_matrix(self, g: np.ndarray) -> np.ndarray:
        mg = self.ring.mult_matrix(g)
        return (self.to_quotient @ ((mg @ self.lifts) % self.ring.mod)) % self.ring.mod

    def log_kernel_size(self, g: np.ndarray) -> int:
        """log_p |M[g]|, computed as log_p |M/gM| (M is finite)."""
        q = len(self.exponents)
        if q == 0:
            return 0
        p, m = self.ring.p, self.ring.m
        rel = np.diag([p**e % p**m for e in self.exponents]).astype(np.int64)
        block = np.concatenate([rel, self.action_matrix(g)], axis=1)
        return log_size(cokernel_structure(block, p, m))


def _generator_matrix(ring: FiniteLevelRing, elements: list) -> np.ndarray:
    if not elements:
        return np.zeros((ring.rank, 0), dtype=np.int64)
    return np.concatenate([ring.mult_matrix(e) for e in elements], axis=1)


_MODULE_CACHE: dict = {}


def finite_module(M: CyclicModulePresentation, m: int, n: int) -> FiniteModule:
    """Explicit M_{m,n}; cached per presentation and level since it is direction-free."""
    key = (M.key(), m, n)
    hit = _MODULE_CACHE.get(key)
    if hit is not None:
        return hit
    p = M.prime
    ring = FiniteLevelRing(p, m, n)
    a = _generator_matrix(ring, [g.level_element(ring) for g in M.generators])
    if a.shape[1] == 0:
        eye = np.eye(ring.rank, dtype=np.int64)
        mod = FiniteModule(ring, [m] * ring.rank, eye, eye)
    else:
        vals, u, u_inv = smith_valuations(a, p, m, track=True)
        keep = [i for i in range(ring.rank) if i >= len(vals) or vals[i] > 0]
        exps = [vals[i] if i < len(vals) else m for i in keep]
        mod = FiniteModule(ring, exps, u[keep], u_inv[:, keep])
    if len(_MODULE_CACHE) > 64:
        _MODULE_CACHE.clear()
    _MODULE_CACHE[key] = mod
    return mod


# -- verdicts ------------------------------------------------------------------


class Verdict(str, Enum):
    TORSION = "TORSION"
    NOT_CONCLUDED = "NOT_CONCLUDED"
    INDETERMINATE = "INDETERMINATE"


@dataclass
class CoinvariantsReport:
    verdict: Verdict
    certified_generators: list  # indices i with pi(g_i) certified nonzero
    mu: int | None = None
    lam: int | None = None


def coinvariants_torsion(M: CyclicModulePresentation, direction: Direction,
                         policy: PrecisionPolicy | None = None) -> CoinvariantsReport:
    """H_0 = Lambda_{a,b}/(pi(g_1), ..., pi(g_k)); torsion iff some pi(g_i) is certified."""
    policy = policy or PrecisionPolicy(20, 8)
    certified, measures = [], []
    for i, g in enumerate(M.generators):
        proj = project(g.series(M.prime, policy), direction)
        if proj.certified_terms():
            certified.append(i)
            try:
                measures.append(mu_lambda(proj))
            except PrecisionError:
                pass
    if not certified:
        return CoinvariantsReport(Verdict.NOT_CONCLUDED, [])
    mu, lam = min(measures) if measures else (None, None)
    return CoinvariantsReport(Verdict.TORSION, certified, mu, lam)


@dataclass
class KernelRow:
    p: int
    m: int
    n: int
    log_module_size: int
    log_kernel_size: int

    @property
    def kernel_size(self) -> int:
        return self.p**self.log_kernel_size

    @property
    def module_size(self) -> int:
        return self.p**self.log_module_size


def f_torsion_finite_level(M: CyclicModulePresentation, direction: Direction,
                           levels: list) -> list[KernelRow]:
    """log_p of |M_{m,n}[f_{a,b}]| at each (m, n), with log_p |M_{m,n}|.

    Sizes are reported as base-p logarithms; a bounded column at fixed m is
    a consistency check for torsion of H_1, not a proof.
    """
    rows = []
    for m, n in levels:
        mod = finite_module(M, m, n)
        f = mod.ring.f_ab(direction)
        rows.append(KernelRow(M.prime, m, n, mod.log_size(), mod.log_kernel_size(f)))
    return rows


def finite_level_rank(f_poly: list[int], p: int, m: int, n: int) -> int:
    """Number of free Z/p^m summands of (Z/p^m)[T]/(f, omega_n)."""
    ring = FiniteLevelRing(p, m, n, nvars=1)
    g = ring.from_poly({i: c for i, c in enumerate(f_poly) if c})
    vals = smith_valuations(ring.mult_matrix(g), p, m)
    return ring.rank - len(vals)


def finite_level_structure(f_poly: list[int], p: int, m: int, n: int) -> list[int]:
    ring = FiniteLevelRing(p, m, n, nvars=1)
    g = ring.from_poly({i: c for i, c in enumerate(f_poly) if c})
    return cokernel_structure(ring.mult_matrix(g), p, m)


class PseudoNull(str, Enum):
    SUFFICIENT_YES = "SUFFICIENT_YES"
    UNKNOWN = "UNKNOWN"


@dataclass
class PseudoNullReport:
    verdict: PseudoNull
    catalog: str | None = None
    reason: str = ""


def _one_variable(g) -> str | None:
    if not isinstance(g, Poly) or g.is_constant():
        return None
    vs = g.variables()
    return next(iter(vs)) if len(vs) == 1 else None


def pseudo_null_sufficient(M: CyclicModulePresentation) -> PseudoNullReport:
    """One-sided catalog test for pseudo-nullity; never answers 'no'."""
    p = M.prime
    gens = M.generators
    for g in gens:
        if isinstance(g, Poly) and g.is_constant() and g.terms and g.content_valuation(p) == 0:
            return PseudoNullReport(PseudoNull.SUFFICIENT_YES, "unit", "a generator is a unit; M = 0")
    # (i) p^mu together with a one-variable polynomial not divisible by p
    has_p_power = any(isinstance(g, Poly) and g.is_constant() and g.terms for g in gens)
    if has_p_power:
        for g in gens:
            if _one_variable(g) and g.content_valuation(p) == 0:
                return PseudoNullReport(PseudoNull.SUFFICIENT_YES, "i",
                                        "p-power with a one-variable polynomial prime to p")
    # (ii) a polynomial in X only and one in Y only, not both divisible by p
    xs = [g for g in gens if _one_variable(g) == "X"]
    ys = [g for g in gens if _one_variable(g) == "Y"]
    for gx in xs:
        for gy in ys:
            if gx.content_valuation(p) == 0 or gy.content_valuation(p) == 0:
                return PseudoNullReport(PseudoNull.SUFFICIENT_YES, "ii",
                                        "coprime one-variable polynomials in X and Y")
    # (iii) f_{a,b}, f_{a',b'} for distinct directions
    fabs = [g.direction for g in gens if isinstance(g, Fab)]
    for i, d in enumerate(fabs):
        for d2 in fabs[i + 1:]:
            if _certainly_distinct(d, d2):
                return PseudoNullReport(PseudoNull.SUFFICIENT_YES, "iii",
                                        "f_{a,b} for two distinct directions")
    return PseudoNullReport(PseudoNull.UNKNOWN, None, "no catalog configuration found")


def _certainly_distinct(d1: Direction, d2: Direction) -> bool:
    if d1.chart is not d2.chart:
        # B_UNIT has v(b) = 0 while A_UNIT has v(b) > 0: always distinct
        return True
    diff = d1.ratio - d2.ratio
    return not diff.is_zero()
