"""Truncated power series over Z_p in one and two variables.

``PowerSeries2`` models Z_p[[X, Y]] (X = sigma - 1, Y = tau - 1) and
``PowerSeries1`` models Z_p[[Z]].  Terms of total degree >= degree_bound
are unknown, not zero.  Coefficients are :class:`PadicNumber` values;
an absent key is an exact zero, while a stored zero is only known modulo
some power of p.  A series may carry one global denominator exponent
``denom_exp`` so that it represents ``p**(-denom_exp)`` times an integral
series.
"""

from __future__ import annotations

from dataclasses import dataclass

from .padic import (
    INF,
    Chart,
    Direction,
    PadicNumber,
    PrecisionError,
    format_coefficient,
    parse_coefficient,
)


@dataclass(frozen=True)
class PrecisionPolicy:
    coeff_prec: int = 20
    degree_bound: int = 16

    def __post_init__(self):
        if self.coeff_prec < 1:
            raise ValueError("coeff_prec must be >= 1")
        if self.degree_bound < 2:
            raise ValueError("degree_bound must be >= 2")

    def with_degree(self, n: int) -> PrecisionPolicy:
        return PrecisionPolicy(self.coeff_prec, n)


class PolicyMismatch(ValueError):
    pass


class _Series:
    """Shared machinery; subclasses fix the key type."""

    __slots__ = ("prime", "policy", "coeffs", "denom_exp")

    def __init__(self, prime: int, policy: PrecisionPolicy, coeffs=None, denom_exp: int = 0):
        self.prime = prime
        self.policy = policy
        n = policy.degree_bound
        clean = {}
        for k, c in (coeffs or {}).items():
            if c.prime != prime:
                raise ValueError("coefficient prime mismatch")
            if self._deg(k) < n and not c.is_exact_zero():
                clean[k] = c
        self.coeffs = clean
        self.denom_exp = denom_exp

    @staticmethod
    def _deg(key) -> int:
        raise NotImplementedError

    @staticmethod
    def _key_add(k1, k2):
        raise NotImplementedError

    # -- structure --------------------------------------------------------

    @property
    def degree_bound(self) -> int:
        return self.policy.degree_bound

    def _same(self, coeffs, denom_exp=None, policy=None):
        return type(self)(self.prime, policy or self.policy, coeffs,
                          self.denom_exp if denom_exp is None else denom_exp)

    def _check(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if other.prime != self.prime:
            raise PolicyMismatch("prime mismatch")
        if other.policy != self.policy:
            raise PolicyMismatch(f"policy mismatch: {self.policy} vs {other.policy}")

    def coefficient(self, key) -> PadicNumber:
        """The Q_p coefficient at ``key`` (denominator applied)."""
        c = self.coeffs.get(key)
        if c is None:
            return PadicNumber.zero(self.prime)
        return c.shift(-self.denom_exp) if self.denom_exp else c

    def truncate(self, n: int):
        if n > self.degree_bound:
            raise ValueError("cannot raise the degree bound by truncating")
        return self._same(self.coeffs, policy=self.policy.with_degree(n))

    def is_exactly_zero(self) -> bool:
        return not self.coeffs

    def is_zero_to_precision(self) -> bool:
        m = self.policy.coeff_prec
        return all(c.is_zero() or c.valuation >= m for c in self.coeffs.values())

    def certified_terms(self):
        """(key, coefficient) pairs provably nonzero below coeff_prec, by degree."""
        m = self.policy.coeff_prec
        out = [(k, c) for k, c in self.coeffs.items()
               if not c.is_zero() and c.valuation < m]
        out.sort(key=lambda kc: (self._deg(kc[0]), kc[0]))
        return out

    def min_coeff_precision(self):
        return min((c.abs_prec for c in self.coeffs.values()), default=INF)

    # -- arithmetic -------------------------------------------------------

    def _aligned(self, other):
        e = max(self.denom_exp, other.denom_exp)
        a = {k: c.shift(e - self.denom_exp) for k, c in self.coeffs.items()} \
            if e != self.denom_exp else self.coeffs
        b = {k: c.shift(e - other.denom_exp) for k, c in other.coeffs.items()} \
            if e != other.denom_exp else other.coeffs
        return a, b, e

    def __add__(self, other):
        if isinstance(other, (int, PadicNumber)):
            return self + self.constant(other)
        self._check(other)
        a, b, e = self._aligned(other)
        out = dict(a)
        for k, c in b.items():
            out[k] = out[k] + c if k in out else c
        return self._same(out, denom_exp=e)

    __radd__ = __add__

    def __neg__(self):
        return self._same({k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c: PadicNumber | int):
        if isinstance(c, int):
            c = PadicNumber.from_int(self.prime, c, max(self.policy.coeff_prec, 1)) \
                if c else PadicNumber.zero(self.prime)
        e = self.denom_exp
        if c.valuation < 0 and not c.is_zero():
            # keep coefficients integral by raising the denominator
            e += -c.valuation
            c = c.shift(-c.valuation)
        return self._same({k: v * c for k, v in self.coeffs.items()}, denom_exp=e)

    def __mul__(self, other):
        if isinstance(other, (int, PadicNumber)):
            return self.scale(other)
        self._check(other)
        n = self.degree_bound
        deg, key_add = self._deg, self._key_add
        out = {}
        for k1, c1 in self.coeffs.items():
            d1 = deg(k1)
            for k2, c2 in other.coeffs.items():
                if d1 + deg(k2) >= n:
                    continue
                k = key_add(k1, k2)
                prod = c1 * c2
                out[k] = out[k] + prod if k in out else prod
        return self._same(out, denom_exp=self.denom_exp + other.denom_exp)

    __rmul__ = __mul__

    def __eq__(self, other):
        """Equality to precision: the difference is zero to working precision."""
        if isinstance(other, int):
            other = self.constant(other)
        if not isinstance(other, _Series):
            return NotImplemented
        diff = self - other
        return all(c.is_zero() for c in diff.coeffs.values())

    __hash__ = None

    def constant(self, c):
        if isinstance(c, int):
            c = PadicNumber.from_int(self.prime, c, self.policy.coeff_prec) \
                if c else PadicNumber.zero(self.prime)
        return type(self)(self.prime, self.policy, {self._zero_key(): c})

    @staticmethod
    def _zero_key():
        raise NotImplementedError

    # -- serialization ----------------------------------------------------

    def to_triples(self) -> list[list]:
        """[[i, j, coefficient-string], ...] sorted by key; univariate uses j = 0."""
        m = self.policy.coeff_prec
        rows = []
        for k in sorted(self.coeffs):
            i, j = (k, 0) if isinstance(k, int) else k
            rows.append([i, j, format_coefficient(self.coefficient(k), m)])
        return rows

    @classmethod
    def from_triples(cls, p: int, policy: PrecisionPolicy, rows):
        raw = {}
        for row in rows:
            if len(row) != 3:
                raise ValueError(f"series entry {row!r} is not an [i, j, coeff] triple")
            i, j, text = row
            if not (isinstance(i, int) and isinstance(j, int)) or i < 0 or j < 0:
                raise ValueError(f"series entry {row!r} has invalid exponents")
            key = cls._key_from_ij(i, j)
            if key in raw:
                raise ValueError(f"duplicate series entry for ({i}, {j})")
            raw[key] = parse_coefficient(str(text), p, policy.coeff_prec)
        e = max([0] + [-c.valuation for c in raw.values()
                       if not c.is_zero() and c.valuation < 0]
                + [-int(c.abs_prec) for c in raw.values()
                   if c.is_zero() and c.abs_prec != INF and c.abs_prec < 0])
        coeffs = {k: c.shift(e) for k, c in raw.items()} if e else raw
        return cls(p, policy, coeffs, denom_exp=e)

    def __repr__(self):
        terms = " + ".join(f"({self.coefficient(k)!r})*{self._mono(k)}"
                           for k in sorted(self.coeffs))
        return f"{type(self).__name__}[{terms or '0'} + O(deg {self.degree_bound})]"


class PowerSeries2(_Series):
    __slots__ = ()

    @staticmethod
    def _deg(key):
        return key[0] + key[1]

    @staticmethod
    def _key_add(k1, k2):
        return (k1[0] + k2[0], k1[1] + k2[1])

    @staticmethod
    def _zero_key():
        return (0, 0)

    @staticmethod
    def _key_from_ij(i, j):
        return (i, j)

    @staticmethod
    def _mono(k):
        return f"X^{k[0]}Y^{k[1]}"

    @classmethod
    def X(cls, p: int, policy: PrecisionPolicy) -> PowerSeries2:
        return cls(p, policy, {(1, 0): PadicNumber.from_int(p, 1, policy.coeff_prec)})

    @classmethod
    def Y(cls, p: int, policy: PrecisionPolicy) -> PowerSeries2:
        return cls(p, policy, {(0, 1): PadicNumber.from_int(p, 1, policy.coeff_prec)})

    @classmethod
    def from_univariate(cls, s: PowerSeries1, var: str) -> PowerSeries2:
        if var == "X":
            coeffs = {(i, 0): c for i, c in s.coeffs.items()}
        elif var == "Y":
            coeffs = {(0, j): c for j, c in s.coeffs.items()}
        else:
            raise ValueError("var must be 'X' or 'Y'")
        return cls(s.prime, s.policy, coeffs, s.denom_exp)


class PowerSeries1(_Series):
    __slots__ = ()

    @staticmethod
    def _deg(key):
        return key

    @staticmethod
    def _key_add(k1, k2):
        return k1 + k2

    @staticmethod
    def _zero_key():
        return 0

    @staticmethod
    def _key_from_ij(i, j):
        if j != 0:
            raise ValueError("univariate series entries must have j = 0")
        return i

    @staticmethod
    def _mono(k):
        return f"Z^{k}"

    @classmethod
    def Z(cls, p: int, policy: PrecisionPolicy) -> PowerSeries1:
        return cls(p, policy, {1: PadicNumber.from_int(p, 1, policy.coeff_prec)})

    @classmethod
    def from_ints(cls, p: int, policy: PrecisionPolicy, values) -> PowerSeries1:
        """Series with integer coefficients ``values[k]`` at Z^k."""
        return cls(p, policy, {k: PadicNumber.from_int(p, v, policy.coeff_prec)
                               for k, v in enumerate(values) if v})

    def dense(self) -> list:
        """Coefficient list of length degree_bound; None marks an exact zero."""
        out = [None] * self.degree_bound
        for k, c in self.coeffs.items():
            out[k] = c
        return out

    def valuation_profile(self):
        return {k: c.valuation for k, c in self.coeffs.items()}


PowerSeries = _Series


def ps_arith(op: str, f, g):
    if op == "add":
        return f + g
    if op == "mul":
        if isinstance(g, PadicNumber):
            raise TypeError("use scalar_mul for scalars")
        return f * g
    if op == "scalar_mul":
        return f.scale(g)
    raise ValueError(f"unknown op {op!r}")


def partial_derivative(L: PowerSeries2, var: str) -> PowerSeries2:
    policy = L.policy.with_degree(max(L.degree_bound - 1, 2))
    out = {}
    for (i, j), c in L.coeffs.items():
        if var == "X" and i > 0:
            out[(i - 1, j)] = c * i
        elif var == "Y" and j > 0:
            out[(i, j - 1)] = c * j
        elif var not in ("X", "Y"):
            raise ValueError("var must be 'X' or 'Y'")
    return PowerSeries2(L.prime, policy, out, L.denom_exp)


def one_plus_power(c: PadicNumber, policy: PrecisionPolicy) -> PowerSeries1:
    """(1 + Z)**c - 1 = sum_{k>=1} C(c, k) Z^k, truncated."""
    if not c.is_integral():
        raise ValueError("exponent must be a p-adic integer")
    p = c.prime
    m = policy.coeff_prec
    coeffs = {}
    num = PadicNumber.from_int(p, 1, max(m, c.rel_prec, 1))
    fact_v, fact_u = 0, 1
    for k in range(1, policy.degree_bound):
        num = num * (c - (k - 1))
        if num.is_exact_zero():
            break
        kk = k
        while kk % p == 0:
            kk //= p
            fact_v += 1
        fact_u *= kk
        if num.is_zero():
            coeff = PadicNumber.zero(p, num.abs_prec - fact_v)
        else:
            mod = p**num.rel_prec
            coeff = PadicNumber(p, num.valuation - fact_v,
                                (num.unit * pow(fact_u, -1, mod)) % mod, num.rel_prec)
        coeffs[k] = coeff.lift_to(m)
    return PowerSeries1(p, policy, coeffs)


def f_ab(direction: Direction, policy: PrecisionPolicy) -> PowerSeries2:
    """(1+X)**a (1+Y)**b - 1 for the canonical representative of the direction."""
    ax = PowerSeries2.from_univariate(one_plus_power(direction.a, policy), "X")
    by = PowerSeries2.from_univariate(one_plus_power(direction.b, policy), "Y")
    return ax + by + ax * by


def _mul_dense(a: list, b: list, n: int) -> list:
    out = [None] * n
    for i, ca in enumerate(a):
        if ca is None:
            continue
        for j in range(min(len(b), n - i)):
            cb = b[j]
            if cb is None:
                continue
            prod = ca * cb
            cur = out[i + j]
            out[i + j] = prod if cur is None else cur + prod
    return out


def _axpy(acc: list, c: PadicNumber, v: list) -> None:
    for k, x in enumerate(v):
        if x is None:
            continue
        t = c * x
        acc[k] = t if acc[k] is None else acc[k] + t


def substitute(L: PowerSeries2, sx: PowerSeries1, sy: PowerSeries1) -> PowerSeries1:
    """L(sx(Z), sy(Z)); both substituents must vanish at Z = 0."""
    for name, s in (("sx", sx), ("sy", sy)):
        if s.prime != L.prime:
            raise ValueError("prime mismatch in substitution")
        c0 = s.coeffs.get(0)
        if c0 is not None and not c0.is_zero():
            raise ValueError(f"substituent {name} has nonzero constant term")
        if c0 is not None and c0.abs_prec < L.policy.coeff_prec:
            raise PrecisionError(f"substituent {name} constant term only known to O(p^{c0.abs_prec})")
    n = min(L.degree_bound, sx.degree_bound, sy.degree_bound)
    policy = L.policy.with_degree(n)
    x = sx.dense()[:n]
    y = sy.dense()[:n]
    x[0] = y[0] = None

    by_i = {}
    for (i, j), c in L.coeffs.items():
        if i + j < n:
            by_i.setdefault(i, []).append((j, c))
    max_i = max(by_i, default=-1)
    max_j = max((j for terms in by_i.values() for j, _ in terms), default=0)

    # ypow[j] = y**j for j >= 1; the j = 0 term is handled as a constant
    ypow = [None, y]
    for _ in range(2, max_j + 1):
        ypow.append(_mul_dense(ypow[-1], y, n))

    result = [None] * n
    xpow = None
    for i in range(max_i + 1):
        if i in by_i:
            inner = [None] * (n - i)
            for j, c in by_i[i]:
                if j == 0:
                    inner[0] = c if inner[0] is None else inner[0] + c
                else:
                    _axpy(inner, c, ypow[j][: n - i])
            term = inner if xpow is None else _mul_dense(xpow, inner, n)
            for k, v in enumerate(term):
                if v is not None:
                    result[k] = v if result[k] is None else result[k] + v
        if i < max_i:
            xpow = x if xpow is None else _mul_dense(xpow, x, n)
    return PowerSeries1(L.prime, policy,
                        {k: c for k, c in enumerate(result) if c is not None},
                        denom_exp=L.denom_exp)


def chart_substituents(direction: Direction, policy: PrecisionPolicy):
    """(sx, sy) realizing the projection Lambda -> Lambda/(f_ab) in the direction's chart."""
    p = direction.prime
    z = PowerSeries1.Z(p, policy)
    s = one_plus_power(-direction.ratio, policy)
    if direction.chart is Chart.B_UNIT:
        return z, s
    return s, z


def project(L: PowerSeries2, direction: Direction) -> PowerSeries1:
    if L.prime != direction.prime:
        raise ValueError("prime mismatch between series and direction")
    sx, sy = chart_substituents(direction, L.policy)
    return substitute(L, sx, sy)


@dataclass
class AnticyclotomicRestriction:
    series: PowerSeries1
    vanishing: bool


def restrict_anticyclotomic(L: PowerSeries2) -> AnticyclotomicRestriction:
    """L(X, 0), with the flag telling whether it vanishes to working precision."""
    coeffs = {i: c for (i, j), c in L.coeffs.items() if j == 0}
    s = PowerSeries1(L.prime, L.policy, coeffs, L.denom_exp)
    return AnticyclotomicRestriction(s, s.is_zero_to_precision())
