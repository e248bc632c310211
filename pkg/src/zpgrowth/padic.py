"""Capped-precision arithmetic in Z_p and Q_p.

A :class:`PadicNumber` is ``p**valuation * unit`` where ``unit`` is known
modulo ``p**rel_prec``.  Zero carries an absolute precision instead: an
inexact zero is ``O(p**abs_prec)``, while the exact zero has
``abs_prec == INF``.  Every operation propagates precision by the usual
information-theoretic rules and refuses to guess when a divisor cannot be
told apart from zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from sympy import isprime

INF = math.inf
DEFAULT_PREC = 20


class PrecisionError(ArithmeticError):
    """Raised when a result cannot be decided at the working precision."""


class PrimeMismatch(ValueError):
    pass


def _check_prime(p: int) -> None:
    if not isinstance(p, int) or p < 3 or not isprime(p):
        raise ValueError(f"p must be prime (odd), got {p!r}")


def _vp(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


class PadicNumber:
    __slots__ = ("prime", "valuation", "unit", "rel_prec", "abs_prec")

    def __init__(self, prime, valuation, unit, rel_prec, abs_prec=None):
        # trusted constructor; use make_padic / from_int from outside
        self.prime = prime
        self.valuation = valuation
        self.unit = unit
        self.rel_prec = rel_prec
        self.abs_prec = valuation + rel_prec if abs_prec is None else abs_prec

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, p: int, abs_prec=INF) -> PadicNumber:
        return cls(p, INF, 0, 0, abs_prec)

    @classmethod
    def _normalize(cls, p: int, value: int, shift: int, abs_prec) -> PadicNumber:
        """Number ``p**shift * value`` known modulo ``p**abs_prec``."""
        if abs_prec == INF:
            if value == 0:
                return cls.zero(p)
            raise ValueError("only zero may be exact")
        width = abs_prec - shift
        if width <= 0:
            return cls.zero(p, abs_prec)
        value %= p**width
        if value == 0:
            return cls.zero(p, abs_prec)
        v = 0
        while value % p == 0:
            value //= p
            v += 1
        return cls(p, shift + v, value, width - v)

    @classmethod
    def from_int(cls, p: int, n: int, prec: int = DEFAULT_PREC) -> PadicNumber:
        return make_padic(p, n, 1, prec)

    # -- inspection -------------------------------------------------------

    @property
    def unit_digits(self) -> list[int]:
        """Base-p digits of the unit part, little-endian."""
        digits, u = [], self.unit
        for _ in range(self.rel_prec):
            u, d = divmod(u, self.prime)
            digits.append(d)
        return digits

    def is_zero(self) -> bool:
        """True when zero at the working precision (possibly inexact)."""
        return self.valuation == INF

    def is_exact_zero(self) -> bool:
        return self.valuation == INF and self.abs_prec == INF

    def is_integral(self) -> bool:
        if self.is_zero():
            return self.abs_prec >= 0
        return self.valuation >= 0

    def is_unit(self) -> bool:
        return self.valuation == 0

    def residue(self, k: int | None = None) -> int:
        """Integer representative in [0, p**k), k defaulting to abs_prec."""
        if k is None:
            k = self.abs_prec
        if k == INF:
            raise PrecisionError("exact zero has no finite modulus; pass k")
        if self.is_zero():
            if self.abs_prec < k:
                raise PrecisionError(f"value only known modulo p^{self.abs_prec}")
            return 0
        if self.valuation < 0:
            raise ValueError("not a p-adic integer")
        if k > self.abs_prec:
            raise PrecisionError(f"value only known modulo p^{self.abs_prec}")
        if self.valuation >= k:
            return 0
        return (self.unit * self.prime**self.valuation) % self.prime**k

    def to_fraction(self) -> Fraction:
        """Rational representative; the unit part is taken in [0, p**rel_prec)."""
        if self.is_zero():
            return Fraction(0)
        return Fraction(self.unit) * Fraction(self.prime) ** self.valuation

    def lift_to(self, abs_prec) -> PadicNumber:
        """Same representative, claimed known to ``abs_prec`` (loosening only)."""
        if abs_prec >= self.abs_prec:
            return self
        if self.is_zero():
            return PadicNumber.zero(self.prime, abs_prec)
        return PadicNumber._normalize(
            self.prime, self.unit, self.valuation, abs_prec
        )

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> PadicNumber:
        if isinstance(other, PadicNumber):
            if other.prime != self.prime:
                raise PrimeMismatch(f"prime mismatch: {self.prime} vs {other.prime}")
            return other
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return PadicNumber.zero(self.prime)
            # enough digits that the constant never limits the result
            prec = max(DEFAULT_PREC, self.rel_prec,
                       self.abs_prec if self.abs_prec != INF else 0) + 2
            q = Fraction(other)
            x = make_padic(self.prime, q.numerator, q.denominator, prec)
            return x if x.valuation >= 0 else make_padic(
                self.prime, q.numerator, q.denominator, prec - x.valuation)
        return NotImplemented

    def __add__(self, other):
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        x = self
        if y.is_exact_zero():
            return x
        if x.is_exact_zero():
            return y
        p = x.prime
        abs_prec = min(x.abs_prec, y.abs_prec)
        if x.is_zero() and y.is_zero():
            return PadicNumber.zero(p, abs_prec)
        if x.is_zero():
            base = y.valuation
            value = y.unit
        elif y.is_zero():
            base = x.valuation
            value = x.unit
        else:
            base = min(x.valuation, y.valuation)
            value = x.unit * p ** (x.valuation - base) + y.unit * p ** (y.valuation - base)
        return PadicNumber._normalize(p, value, base, abs_prec)

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero():
            return self
        return PadicNumber(self.prime, self.valuation,
                           (-self.unit) % self.prime**self.rel_prec, self.rel_prec)

    def __sub__(self, other):
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        return self + (-y)

    def __rsub__(self, other):
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        return y + (-self)

    def __mul__(self, other):
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        x = self
        p = x.prime
        if x.is_exact_zero() or y.is_exact_zero():
            return PadicNumber.zero(p)
        if x.is_zero() and y.is_zero():
            return PadicNumber.zero(p, x.abs_prec + y.abs_prec)
        if x.is_zero():
            return PadicNumber.zero(p, x.abs_prec + y.valuation)
        if y.is_zero():
            return PadicNumber.zero(p, y.abs_prec + x.valuation)
        rel = min(x.rel_prec, y.rel_prec)
        return PadicNumber(p, x.valuation + y.valuation,
                           (x.unit * y.unit) % p**rel, rel)

    __rmul__ = __mul__

    def __truediv__(self, other):
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        x = self
        p = x.prime
        if y.is_exact_zero():
            raise ZeroDivisionError("division by exact zero")
        if y.is_zero():
            raise PrecisionError(
                f"indeterminate divisor: O(p^{y.abs_prec}) is indistinguishable from 0"
            )
        if x.is_exact_zero():
            return x
        if x.is_zero():
            return PadicNumber.zero(p, x.abs_prec - y.valuation)
        rel = min(x.rel_prec, y.rel_prec)
        mod = p**rel
        return PadicNumber(p, x.valuation - y.valuation,
                           (x.unit * pow(y.unit, -1, mod)) % mod, rel)

    def __rtruediv__(self, other):
        y = self._coerce(other)
        if y is NotImplemented:
            return NotImplemented
        return y / self

    def shift(self, k: int) -> PadicNumber:
        """Multiply by p**k exactly (k may be negative)."""
        if self.is_zero():
            return PadicNumber.zero(self.prime, self.abs_prec + k)
        return PadicNumber(self.prime, self.valuation + k, self.unit, self.rel_prec)

    # -- comparison -------------------------------------------------------

    def __eq__(self, other):
        y = self._coerce(other) if not isinstance(other, PadicNumber) else other
        if y is NotImplemented:
            return NotImplemented
        if y.prime != self.prime:
            return False
        return (self - y).is_zero()

    __hash__ = None

    def __repr__(self):
        if self.is_zero():
            return "0" if self.abs_prec == INF else f"O({self.prime}^{self.abs_prec})"
        return (f"PadicNumber(p={self.prime}, v={self.valuation}, "
                f"digits={self.unit_digits})")

    def __str__(self):
        return format_coefficient(self)


def make_padic(p: int, numerator: int, denominator: int = 1,
               prec: int = DEFAULT_PREC) -> PadicNumber:
    """p-adic expansion of ``numerator/denominator`` to relative precision ``prec``."""
    _check_prime(p)
    if denominator == 0:
        raise ZeroDivisionError("denominator is zero")
    if prec < 1:
        raise ValueError("prec must be >= 1")
    if numerator == 0:
        return PadicNumber.zero(p)
    vn, vd = _vp(abs(numerator), p), _vp(abs(denominator), p)
    un, ud = numerator // p**vn, denominator // p**vd
    mod = p**prec
    return PadicNumber(p, vn - vd, (un * pow(ud, -1, mod)) % mod, prec)


def valuation(x: PadicNumber):
    """ord_p(x); ``INF`` for a value that is zero at its precision."""
    return x.valuation


def arith(op: str, x: PadicNumber, y: PadicNumber) -> PadicNumber:
    if x.prime != y.prime:
        raise PrimeMismatch(f"prime mismatch: {x.prime} vs {y.prime}")
    if op == "add":
        return x + y
    if op == "sub":
        return x - y
    if op == "mul":
        return x * y
    if op == "div":
        return x / y
    raise ValueError(f"unknown op {op!r}")


def binomial_coefficient(c: PadicNumber, k: int) -> PadicNumber:
    """C(c, k) = c(c-1)...(c-k+1)/k! for a p-adic integer c."""
    if not c.is_integral():
        raise ValueError("binomial_coefficient needs a p-adic integer")
    if k < 0:
        raise ValueError("k must be >= 0")
    p = c.prime
    if k == 0:
        return PadicNumber(p, 0, 1, c.rel_prec if not c.is_zero() else DEFAULT_PREC)
    num = c
    for j in range(1, k):
        num = num * (c - j)
    fact = math.factorial(k)
    vf = _vp(fact, p)
    uf = fact // p**vf
    if num.is_zero():
        result = PadicNumber.zero(p, num.abs_prec - vf)
    else:
        mod = p**num.rel_prec
        result = PadicNumber(p, num.valuation - vf,
                             (num.unit * pow(uf, -1, mod)) % mod, num.rel_prec)
    assert result.is_integral(), "binomial coefficient of a p-adic integer must be integral"
    return result


class Chart(str, Enum):
    B_UNIT = "B_UNIT"
    A_UNIT = "A_UNIT"


@dataclass(frozen=True, eq=False)
class Direction:
    """Canonical representative of (a:b) in P^1(Z_p).

    In chart ``B_UNIT`` the pair is stored as (a/b : 1); in ``A_UNIT`` as
    (1 : b/a).
    """

    a: PadicNumber
    b: PadicNumber
    chart: Chart

    @property
    def prime(self) -> int:
        return self.a.prime

    @property
    def ratio(self) -> PadicNumber:
        """a/b in chart B_UNIT, b/a in chart A_UNIT."""
        return self.a if self.chart is Chart.B_UNIT else self.b

    def is_anticyclotomic(self) -> bool:
        return self.chart is Chart.B_UNIT and self.a.is_zero()

    def is_cyclotomic(self) -> bool:
        return self.chart is Chart.A_UNIT and self.b.is_zero()

    def __eq__(self, other):
        if not isinstance(other, Direction):
            return NotImplemented
        return self.chart is other.chart and self.a == other.a and self.b == other.b

    __hash__ = None

    def label(self) -> str:
        """Short human label, e.g. ``(5/3:1)`` style rational reconstruction."""
        return f"({_short(self.a)}:{_short(self.b)})"

    def __repr__(self):
        return f"Direction{self.label()}[{self.chart.value}]"


def _short(x: PadicNumber) -> str:
    if x.is_zero():
        return "0"
    r = rational_reconstruction(x)
    if r is not None:
        return str(r)
    return format_coefficient(x)


def rational_reconstruction(x: PadicNumber) -> Fraction | None:
    """Small-height rational congruent to x, when one exists."""
    if x.is_zero():
        return Fraction(0)
    p = x.prime
    mod = p**x.rel_prec
    bound = math.isqrt(mod // 2)
    # half-gcd style lattice reduction on (mod, unit)
    r0, r1 = mod, x.unit
    s0, s1 = 0, 1
    while r1 > bound:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
    if s1 == 0 or abs(s1) > bound or math.gcd(s1, p) != 1:
        return None
    return Fraction(r1, s1) * Fraction(p) ** x.valuation


def canonical_direction(a: PadicNumber, b: PadicNumber) -> Direction:
    if a.prime != b.prime:
        raise PrimeMismatch("direction coordinates must share the prime")
    if a.is_zero() and b.is_zero():
        raise PrecisionError("indeterminate direction: both coordinates are zero to precision")
    m = min(a.valuation, b.valuation)
    a, b = a.shift(-m), b.shift(-m)
    p = a.prime
    if b.valuation == 0:
        one = PadicNumber(p, 0, 1, b.rel_prec)
        return Direction(a / b, one, Chart.B_UNIT)
    if a.is_zero() and a.abs_prec < 1:
        # b not a unit but a is not known to be one either
        raise PrecisionError("indeterminate direction: cannot certify a unit coordinate")
    one = PadicNumber(p, 0, 1, a.rel_prec)
    return Direction(one, b / a, Chart.A_UNIT)


def direction_from_ints(p: int, a: int, b: int, prec: int = DEFAULT_PREC) -> Direction:
    if a == 0 and b == 0:
        raise PrecisionError("indeterminate direction: (0:0)")
    return canonical_direction(make_padic(p, a, 1, prec) if a else PadicNumber.zero(p),
                               make_padic(p, b, 1, prec) if b else PadicNumber.zero(p))


def parse_direction(text: str, p: int, prec: int = DEFAULT_PREC) -> Direction:
    """Parse ``"a:b"`` with base-10 integer (or ``num/den``) coordinates."""
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"direction {text!r} is not of the form 'a:b'")
    coords = []
    for part in parts:
        q = Fraction(part.strip())
        if q == 0:
            coords.append(PadicNumber.zero(p))
        else:
            coords.append(make_padic(p, q.numerator, q.denominator, prec))
    return canonical_direction(*coords)


def kronecker_symbol(D: int, q: int) -> int:
    """Kronecker symbol (D/q) for q >= 1."""
    if q < 1:
        raise ValueError("q must be positive")
    result = 1
    # factor 2
    v = 0
    while q % 2 == 0:
        q //= 2
        v += 1
    if v:
        if D % 2 == 0:
            return 0
        if D % 8 in (3, 5) and v % 2 == 1:
            result = -result
    # Jacobi symbol (D/q), q odd
    a = D % q
    n = q
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def euler_phi_ppower(p: int, k: int) -> int:
    return 1 if k == 0 else p ** (k - 1) * (p - 1)


def format_coefficient(x: PadicNumber, prec: int | None = None) -> str:
    """Serialize as a base-10 residue, or ``v:d0d1...`` when that loses data.

    The residue form is used for integral values known to exactly ``prec``
    digits (or any precision when ``prec`` is None).  Everything else uses
    the valuation-digit form; ``v:`` with no digits is a zero known to
    ``O(p^v)``.  Digits are comma-separated when p > 10.
    """
    if x.is_exact_zero():
        return "0"
    p = x.prime
    if x.is_zero():
        return f"{x.abs_prec}:"
    if x.valuation >= 0 and (prec is None or x.abs_prec == prec):
        return str(x.residue())
    sep = "," if p > 10 else ""
    return f"{x.valuation}:" + sep.join(str(d) for d in x.unit_digits)


def parse_coefficient(text: str, p: int, prec: int) -> PadicNumber:
    """Inverse of :func:`format_coefficient`; bare integers are read mod p^prec."""
    text = text.strip()
    if ":" in text:
        v_text, digits = text.split(":", 1)
        try:
            v = int(v_text)
            digits = digits.strip()
            ds = [int(d) for d in (digits.split(",") if p > 10 else digits)] if digits else []
        except ValueError:
            raise ValueError(f"malformed coefficient string {text!r}") from None
        if not ds:
            return PadicNumber.zero(p, v)
        if any(not 0 <= d < p for d in ds):
            raise ValueError(f"digit out of range in {text!r}")
        if ds[0] == 0:
            raise ValueError(f"leading digit must be nonzero in {text!r}")
        unit = sum(d * p**i for i, d in enumerate(ds))
        return PadicNumber(p, v, unit, len(ds))
    try:
        n = int(text)
    except ValueError:
        raise ValueError(f"malformed coefficient string {text!r}") from None
    if n == 0:
        return PadicNumber.zero(p)
    return PadicNumber._normalize(p, n, 0, prec)
