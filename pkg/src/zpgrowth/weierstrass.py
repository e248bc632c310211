"""Weierstrass division/preparation in Z_p[[T]] and the cyclotomic corank count.

Truncation matters here: the quotient of a Weierstrass division depends on
every coefficient of the dividend, so coefficients beyond the degree bound
are fed into the iteration as ``O(p^0)`` unknowns.  The precision this costs
shows up in the returned coefficients rather than being hidden.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .padic import INF, PadicNumber, PrecisionError, euler_phi_ppower
from .series import PowerSeries1, PrecisionPolicy

N_MAX_DEFAULT = 6


class NotDivisible(ArithmeticError):
    """The divisor has no unit coefficient within the degree bound."""


class Indeterminate(PrecisionError):
    pass


# -- invariants ----------------------------------------------------------------


def mu_lambda(f: PowerSeries1) -> tuple[int, int]:
    """(mu, lambda) of f, certified from the stored coefficients.

    Raises PrecisionError when f is zero to precision or when an unresolved
    coefficient could hide a smaller valuation.
    """
    m = f.policy.coeff_prec
    certified = f.certified_terms()
    if not certified:
        raise PrecisionError("series is zero to working precision")
    mu = min(c.valuation for _, c in certified)
    lam = min(k for k, c in certified if c.valuation == mu)
    for k, c in f.coeffs.items():
        if c.is_zero() and (c.abs_prec < mu or (k < lam and c.abs_prec <= mu)):
            raise PrecisionError(
                f"coefficient of T^{k} is only O(p^{c.abs_prec}); mu/lambda undetermined"
            )
    if mu >= m:
        raise PrecisionError("series is zero to working precision")
    return mu - f.denom_exp, lam


def _unknown(p: int) -> PadicNumber:
    return PadicNumber.zero(p, 0)


def _inverse(u: list, n: int) -> list:
    """Inverse of a unit power series given densely (None = exact zero)."""
    p = u[0].prime
    inv0 = PadicNumber(p, 0, 1, max(u[0].rel_prec, 1)) / u[0]
    out = [inv0] + [None] * (n - 1)
    for k in range(1, n):
        acc = None
        for i in range(1, k + 1):
            if i < len(u) and u[i] is not None and out[k - i] is not None:
                t = u[i] * out[k - i]
                acc = t if acc is None else acc + t
        out[k] = None if acc is None else -(acc * inv0)
    return out


def _same_repr(a, b) -> bool:
    if a is None or b is None:
        return a is b
    return (a.valuation, a.unit, a.rel_prec, a.abs_prec) == \
        (b.valuation, b.unit, b.rel_prec, b.abs_prec)


def weierstrass_divide(g: PowerSeries1, f: PowerSeries1):
    """Return (q, r) with g = q*f + r and deg r < lambda(f).

    ``f`` must have mu = 0.  q carries degree bound N - lambda; r is a
    PowerSeries1 supported in degrees < lambda.
    """
    if g.prime != f.prime:
        raise ValueError("prime mismatch")
    if g.denom_exp or f.denom_exp:
        raise ValueError("clear denominators before dividing")
    p = f.prime
    n = min(g.degree_bound, f.degree_bound)
    fd = f.dense()[:n]
    lam = next((k for k, c in enumerate(fd)
                if c is not None and not c.is_zero() and c.valuation == 0), None)
    if lam is None:
        raise NotDivisible("not divisible at this precision: divisor has no unit coefficient")
    for k in range(lam):
        c = fd[k]
        if c is not None and c.is_zero() and c.abs_prec < 1:
            raise PrecisionError(f"divisor coefficient of T^{k} is not known mod p")
    nq = n - lam
    if nq < 1:
        raise PrecisionError("lambda exceeds truncation")
    low = fd[:lam]
    unit = fd[lam:n]
    unit_inv = _inverse(unit, nq)
    gd = g.dense()[:n]
    shifted_g = gd[lam:n]

    q = [None] * nq
    for _ in range(f.policy.coeff_prec + nq + 2):
        # tail = shift_down(low * q); q entries past nq are unknown
        tail = [None] * nq
        for d in range(nq):
            acc = None
            for i, c in enumerate(low):
                if c is None:
                    continue
                idx = d + lam - i
                qv = q[idx] if idx < nq else _unknown(p)
                if qv is None:
                    continue
                t = c * qv
                acc = t if acc is None else acc + t
            tail[d] = acc
        rhs = [None] * nq
        for d in range(nq):
            a, b = shifted_g[d], tail[d]
            if b is None:
                rhs[d] = a
            else:
                rhs[d] = -b if a is None else a - b
        new_q = [None] * nq
        for k in range(nq):
            acc = None
            for i in range(k + 1):
                if unit_inv[i] is not None and rhs[k - i] is not None:
                    t = unit_inv[i] * rhs[k - i]
                    acc = t if acc is None else acc + t
            new_q[k] = acc
        if all(_same_repr(a, b) for a, b in zip(new_q, q)):
            break
        q = new_q
    else:
        raise PrecisionError("Weierstrass division did not stabilize")

    qs = PowerSeries1(p, g.policy.with_degree(max(nq, 2)),
                      {k: c for k, c in enumerate(q) if c is not None})
    # r = (g - q*f) in degrees < lam
    r = {}
    for k in range(lam):
        acc = gd[k]
        for i in range(min(k + 1, nq)):
            if q[i] is not None and fd[k - i] is not None:
                t = q[i] * fd[k - i]
                acc = -t if acc is None else acc - t
        if acc is not None:
            r[k] = acc
    rs = PowerSeries1(p, g.policy, r)
    return qs, rs


@dataclass
class DistinguishedData:
    mu: int
    distinguished: list  # PadicNumber coefficients, low to high, monic
    unit: PowerSeries1

    @property
    def lam(self) -> int:
        return len(self.distinguished) - 1

    def distinguished_series(self, policy: PrecisionPolicy) -> PowerSeries1:
        return PowerSeries1(self.distinguished[0].prime, policy,
                            dict(enumerate(self.distinguished)))

    def reconstruct(self) -> PowerSeries1:
        """p^mu * P * U at the unit's degree bound."""
        pol = self.unit.policy
        prod = self.distinguished_series(pol) * self.unit
        if self.mu >= 0:
            return prod.scale(PadicNumber(prod.prime, self.mu, 1, pol.coeff_prec))
        return PowerSeries1(prod.prime, pol, prod.coeffs, prod.denom_exp - self.mu)


def weierstrass_prepare(f: PowerSeries1) -> DistinguishedData:
    mu, lam = mu_lambda(f)
    p = f.prime
    n = f.degree_bound
    if lam >= n - 1:
        raise PrecisionError("lambda exceeds truncation")
    # integral part divided by p^(mu + denom_exp)
    shift = mu + f.denom_exp
    g = PowerSeries1(p, f.policy, {k: c.shift(-shift) for k, c in f.coeffs.items()})
    t_lam = PowerSeries1(p, f.policy,
                         {lam: PadicNumber.from_int(p, 1, f.policy.coeff_prec + 1)})
    q, r = weierstrass_divide(t_lam, g)
    one = PadicNumber.from_int(p, 1, f.policy.coeff_prec)
    poly = [-(r.coeffs[k]) if k in r.coeffs else PadicNumber.zero(p) for k in range(lam)]
    poly.append(one)
    qd = q.dense()
    if qd[0] is None or qd[0].valuation != 0:
        raise PrecisionError("quotient is not a unit at this precision")
    u = _inverse(qd, q.degree_bound)
    unit = PowerSeries1(p, q.policy, {k: c for k, c in enumerate(u) if c is not None})
    return DistinguishedData(mu, poly, unit)


# -- cyclotomic polynomials ----------------------------------------------------


def omega_poly(p: int, n: int) -> list[int]:
    """(1+T)^(p^n) - 1 as an integer coefficient list, low degree first."""
    e = p**n
    return [0] + [comb(e, k) for k in range(1, e + 1)]


def cyclotomic_factor(p: int, k: int, limit: int | None = None) -> list[int]:
    """omega_k / omega_{k-1} (T itself when k = 0), optionally only below T^limit."""
    if k == 0:
        return [0, 1][:limit]
    step = p ** (k - 1)
    size = (p - 1) * step + 1
    if limit is not None:
        size = min(size, limit)
    out = [0] * size
    # sum_{i<p} (1+T)^(i*step)
    for i in range(p):
        e = i * step
        for j in range(min(e, size - 1) + 1):
            out[j] += comb(e, j)
    return out


def poly_mul(a: list[int], b: list[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def series_from_poly(p: int, policy: PrecisionPolicy, coeffs: list[int]) -> PowerSeries1:
    if len(coeffs) > policy.degree_bound:
        coeffs = coeffs[: policy.degree_bound]
    return PowerSeries1.from_ints(p, policy, coeffs)


def _clear_mu(f: PowerSeries1) -> PowerSeries1:
    mu, _ = mu_lambda(f)
    shift = mu + f.denom_exp
    if shift == 0:
        return f
    return PowerSeries1(f.prime, f.policy, {k: c.shift(-shift) for k, c in f.coeffs.items()})


def cyclotomic_multiplicity(f: PowerSeries1, k: int) -> int:
    """Largest e with (cyclotomic factor of level k)^e dividing f."""
    p = f.prime
    deg = 1 if k == 0 else euler_phi_ppower(p, k)
    phi = None
    cur = _clear_mu(f)
    count = 0
    while True:
        try:
            _, lam = mu_lambda(cur)
        except PrecisionError as exc:
            raise Indeterminate(
                f"quotient chain is precision-starved after {count} division(s): {exc}"
            ) from None
        if lam < deg:
            return count
        if phi is None:
            phi = cyclotomic_factor(p, k, f.degree_bound)
        divisor = series_from_poly(
            p, PrecisionPolicy(cur.policy.coeff_prec + 2, cur.degree_bound), phi)
        divisor = PowerSeries1(p, cur.policy, divisor.coeffs)
        q, r = weierstrass_divide(cur, divisor)
        if r.certified_terms():
            return count
        count += 1
        cur = _clear_mu(q) if not q.is_zero_to_precision() else q


@dataclass
class GrowthFormulaInput:
    """Free Lambda-rank r and characteristic series f of the torsion part."""

    free_rank: int
    torsion_char: PowerSeries1 | None = None
    prime: int | None = None

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("free_rank must be >= 0")
        if self.torsion_char is not None:
            if self.torsion_char.is_zero_to_precision():
                raise ValueError("torsion characteristic series is zero to precision")
            if self.prime is None:
                self.prime = self.torsion_char.prime
            elif self.prime != self.torsion_char.prime:
                raise ValueError("prime mismatch")
        if self.prime is None:
            raise ValueError("prime is required when no torsion series is given")


def corank_table(inp: GrowthFormulaInput, n_max: int = N_MAX_DEFAULT) -> list[tuple[int, int]]:
    """[(n, corank_n)] for n = 0..n_max.

    corank_n = r p^n + sum over k <= n of phi(p^k) for each cyclotomic
    factor present in f (presence, not multiplicity).
    """
    p = inp.prime
    f = inp.torsion_char
    rows = []
    bounded = 0
    for n in range(n_max + 1):
        if f is not None and cyclotomic_multiplicity(f, n) >= 1:
            bounded += euler_phi_ppower(p, n)
        rows.append((n, inp.free_rank * p**n + bounded))
    return rows


def corank_at_level(inp: GrowthFormulaInput, n: int, n_max: int = N_MAX_DEFAULT) -> int:
    if n < 0 or n > n_max:
        raise ValueError(f"level {n} outside 0..{n_max}")
    return corank_table(inp, n)[n][1]


def growth_number(inp: GrowthFormulaInput) -> int:
    return inp.free_rank
