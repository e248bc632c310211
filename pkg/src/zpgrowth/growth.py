"""Cyclotomic-derivative criterion and per-direction growth predictions.

Along a direction (a:b) != (0:1) the linear coefficient of pi_{a,b}(L) is a
nonzero multiple of dL/dY(0, 0): -(a/b) times it when b is a unit, the
value itself when a is a unit.  A nonzero linear coefficient certifies
pi_{a,b}(L) != 0, which (under h-IMC) makes the Selmer dual torsion over
that extension, so the growth number there is 0.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

from sympy import factorint, isprime

from .padic import (
    Chart,
    Direction,
    PadicNumber,
    PrecisionError,
    format_coefficient,
    kronecker_symbol,
)
from .series import PowerSeries1, PowerSeries2, project, restrict_anticyclotomic
from .weierstrass import (
    N_MAX_DEFAULT,
    GrowthFormulaInput,
    corank_table,
    mu_lambda,
)

log = logging.getLogger(__name__)

H_IMC_ASSUMED = "H_IMC_ASSUMED"
INTEGRAL = "INTEGRAL"

DERIVED_HEIGHT_CAVEAT = (
    "height derived from dL/dY(0,0): the two agree only up to a unit, "
    "so only nonvanishing and ord_p are reported"
)


class ExcludedDirection(ValueError):
    """The anticyclotomic direction (0:1) is outside the derivative criterion."""


class PreconditionError(ValueError):
    pass


@dataclass
class TwoVarLFunction:
    series: PowerSeries2
    provenance: str = ""
    hypothesis_flags: frozenset = frozenset()

    @property
    def prime(self) -> int:
        return self.series.prime


class HeightKind(str, Enum):
    EXPLICIT = "EXPLICIT"
    DECLARED_NONZERO = "DECLARED_NONZERO"
    DERIVE_FROM_L = "DERIVE_FROM_L"


@dataclass
class HeightValue:
    kind: HeightKind
    value: PadicNumber | None = None

    @classmethod
    def derive(cls) -> HeightValue:
        return cls(HeightKind.DERIVE_FROM_L)

    @classmethod
    def nonzero(cls) -> HeightValue:
        return cls(HeightKind.DECLARED_NONZERO)

    @classmethod
    def explicit(cls, value: PadicNumber) -> HeightValue:
        return cls(HeightKind.EXPLICIT, value)


class CMClass(str, Enum):
    GENERIC = "GENERIC"
    EXCEPTIONAL = "EXCEPTIONAL"


@dataclass(frozen=True)
class MazurSetting:
    cm_class: CMClass = CMClass.GENERIC
    sign: int = -1
    direction_is_anticyclotomic: bool = False

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


def mazur_predicted_growth(setting: MazurSetting) -> int:
    if not setting.direction_is_anticyclotomic or setting.sign == 1:
        return 0
    return 1 if setting.cm_class is CMClass.GENERIC else 2


# -- derivative criterion -------------------------------------------------------


def _dL_dY_at_origin(L: TwoVarLFunction) -> PadicNumber:
    return L.series.coefficient((0, 1))


def derivative_at_origin(L: TwoVarLFunction, direction: Direction) -> PadicNumber:
    """Coefficient of Z in pi_{a,b}(L); accepts (0:1) and returns the literal value."""
    return project(L.series, direction).coefficient(1)


def closed_form_derivative(L: TwoVarLFunction, direction: Direction) -> PadicNumber:
    if direction.is_anticyclotomic():
        raise ExcludedDirection(
            "direction (0:1) is excluded: the derivative criterion needs a != 0"
        )
    d = _dL_dY_at_origin(L)
    if direction.chart is Chart.B_UNIT:
        return -(direction.ratio * d)
    return d


class NonVanishingKind(str, Enum):
    CERTIFIED = "CERTIFIED"
    ZERO_TO_PRECISION = "ZERO_TO_PRECISION"
    INDETERMINATE = "INDETERMINATE"


@dataclass
class NonVanishing:
    kind: NonVanishingKind
    degree: int | None = None
    valuation: int | None = None

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        if self.kind is NonVanishingKind.CERTIFIED:
            out["degree"] = self.degree
            out["valuation"] = self.valuation
        return out


def _certificate(proj: PowerSeries1) -> NonVanishing:
    terms = proj.certified_terms()
    if terms:
        k, c = terms[0]
        return NonVanishing(NonVanishingKind.CERTIFIED, k, c.valuation - proj.denom_exp)
    if proj.is_exactly_zero():
        return NonVanishing(NonVanishingKind.ZERO_TO_PRECISION)
    return NonVanishing(NonVanishingKind.INDETERMINATE)


def nonvanishing_certificate(L: TwoVarLFunction, direction: Direction) -> NonVanishing:
    """Lowest-degree coefficient of pi_{a,b}(L) provably nonzero below coeff_prec."""
    try:
        proj = project(L.series, direction)
    except PrecisionError:
        return NonVanishing(NonVanishingKind.INDETERMINATE)
    return _certificate(proj)


class TorsionVerdict(str, Enum):
    TORSION = "TORSION"
    NOT_TORSION = "NOT_TORSION"  # positive free rank supplied as input
    NOT_CONCLUDED = "NOT_CONCLUDED"
    INDETERMINATE = "INDETERMINATE"


def selmer_coinvariants_torsion(char_factors: list, direction: Direction) -> TorsionVerdict:
    """Torsion of the coinvariants from the projections of characteristic-ideal generators.

    Pseudo-null error terms are torsion over Lambda_{a,b} and are not modelled.
    """
    verdicts = []
    for g in char_factors:
        try:
            proj = project(g, direction)
        except PrecisionError:
            verdicts.append(TorsionVerdict.INDETERMINATE)
            continue
        if proj.certified_terms():
            verdicts.append(TorsionVerdict.TORSION)
        elif proj.is_zero_to_precision():
            verdicts.append(TorsionVerdict.NOT_CONCLUDED)
        else:
            verdicts.append(TorsionVerdict.INDETERMINATE)
    if TorsionVerdict.NOT_CONCLUDED in verdicts:
        return TorsionVerdict.NOT_CONCLUDED
    if TorsionVerdict.INDETERMINATE in verdicts:
        return TorsionVerdict.INDETERMINATE
    return TorsionVerdict.TORSION


# -- hypotheses -----------------------------------------------------------------


def is_fundamental_discriminant(D: int) -> bool:
    if D in (0, 1):
        return False
    if D % 4 == 1:
        return _squarefree(abs(D))
    if D % 4 == 0:
        m = D // 4
        return m % 4 in (2, 3) and _squarefree(abs(m))
    return False


def _squarefree(n: int) -> bool:
    return all(e == 1 for e in factorint(n).values())


@dataclass
class HypothesisReport:
    N: int
    D: int
    p: int
    p_splits: bool
    N_plus: dict
    N_minus: dict
    ramified: dict
    ghh_ok: bool
    ghh_reason: str
    p_ge_5: bool
    squarefree_Nminus: bool

    @staticmethod
    def _value(fac: dict) -> int:
        out = 1
        for q, e in fac.items():
            out *= q**e
        return out

    def to_dict(self) -> dict:
        fmt = lambda fac: {"value": self._value(fac),
                           "factors": [[q, e] for q, e in sorted(fac.items())]}
        return {
            "N": self.N, "D": self.D, "p": self.p,
            "p_splits": self.p_splits,
            "N_plus": fmt(self.N_plus),
            "N_minus": fmt(self.N_minus),
            "ramified": fmt(self.ramified),
            "squarefree_N_minus": self.squarefree_Nminus,
            "ghh_ok": self.ghh_ok,
            "ghh_reason": self.ghh_reason,
            "p_ge_5": self.p_ge_5,
        }


def check_hypotheses(N: int, D: int, p: int) -> HypothesisReport:
    if N < 1:
        raise ValueError("N must be a positive integer")
    if D >= 0 or not is_fundamental_discriminant(D):
        raise ValueError(f"D = {D} is not a negative fundamental discriminant")
    if not isprime(p) or p < 3:
        raise ValueError("p must be an odd prime")
    if N % p == 0:
        raise ValueError(f"p = {p} divides N = {N}: bad reduction at p is excluded")
    plus, minus, ram = {}, {}, {}
    for q, e in sorted(factorint(N).items()):
        s = kronecker_symbol(D, q)
        (plus if s == 1 else minus if s == -1 else ram)[q] = e
    squarefree = all(e == 1 for e in minus.values())
    count = sum(minus.values())
    even = count % 2 == 0
    ghh_ok = squarefree and even
    if not squarefree:
        reason = "N^- is not square-free"
    elif not even:
        reason = f"N^- has {count} prime factor(s), an odd number"
    else:
        reason = f"N^- is square-free with {count} prime factor(s)"
    if ram:
        reason += f"; primes ramified in K divide N: {sorted(ram)}"
    return HypothesisReport(
        N=N, D=D, p=p,
        p_splits=kronecker_symbol(D, p) == 1,
        N_plus=plus, N_minus=minus, ramified=ram,
        ghh_ok=ghh_ok, ghh_reason=reason,
        p_ge_5=p >= 5, squarefree_Nminus=squarefree,
    )


# -- the per-direction analysis --------------------------------------------------


@dataclass
class GrowthReport:
    direction: Direction
    chart: Chart
    derivative_value: PadicNumber | None
    closed_form_value: PadicNumber | None
    nonvanishing: NonVanishing
    torsion_verdict: TorsionVerdict
    lam: int | None
    mu: int | None
    predicted_c: int | None
    mazur_c: int
    corank_table: list | None
    notes: list = field(default_factory=list)

    def is_anticyclotomic(self) -> bool:
        return self.direction.is_anticyclotomic()

    def is_conclusive(self) -> bool:
        return self.torsion_verdict not in (TorsionVerdict.INDETERMINATE,
                                            TorsionVerdict.NOT_CONCLUDED)

    def to_dict(self) -> dict:
        val = lambda x: None if x is None else format_coefficient(x)
        d = self.direction
        return {
            "direction": {"a": format_coefficient(d.a), "b": format_coefficient(d.b),
                          "label": d.label()},
            "chart": self.chart.value,
            "derivative_value": val(self.derivative_value),
            "closed_form_value": val(self.closed_form_value),
            "nonvanishing": self.nonvanishing.to_dict(),
            "torsion_verdict": self.torsion_verdict.value,
            "lambda": self.lam,
            "mu": self.mu,
            "predicted_c": self.predicted_c,
            "mazur_c": self.mazur_c,
            "corank_table": None if self.corank_table is None
            else [[n, c] for n, c in self.corank_table],
            "notes": list(self.notes),
        }


@dataclass
class _Context:
    L: TwoVarLFunction
    height_nonzero: bool | None
    common_notes: list
    ac_free_rank: int
    ac_torsion: PowerSeries1 | None
    setting: MazurSetting
    n_max: int


def _height_status(L: TwoVarLFunction, height: HeightValue):
    """(nonzero?, notes); None when the height cannot be decided."""
    if height.kind is HeightKind.DECLARED_NONZERO:
        return True, ["height declared nonzero by the caller"]
    if height.kind is HeightKind.EXPLICIT:
        return (not height.value.is_zero()), []
    d = _dL_dY_at_origin(L)
    m = L.series.policy.coeff_prec
    notes = [DERIVED_HEIGHT_CAVEAT]
    if not d.is_zero() and d.valuation + L.series.denom_exp < m:
        notes.append(f"derived height has ord_p = {d.valuation}")
        return True, notes
    if d.is_exact_zero():
        notes.append("dL/dY(0,0) is exactly zero")
        return False, notes
    notes.append("dL/dY(0,0) is zero to working precision")
    return None, notes


def _analyze_one(ctx: _Context, direction: Direction) -> GrowthReport:
    L = ctx.L
    notes = list(ctx.common_notes)
    is_ac = direction.is_anticyclotomic()
    mazur_c = mazur_predicted_growth(MazurSetting(
        ctx.setting.cm_class, ctx.setting.sign, direction_is_anticyclotomic=is_ac))

    try:
        proj = project(L.series, direction)
    except PrecisionError as exc:
        notes.append(f"projection failed: {exc}")
        return GrowthReport(direction, direction.chart, None, None,
                            NonVanishing(NonVanishingKind.INDETERMINATE),
                            TorsionVerdict.INDETERMINATE, None, None, None, mazur_c, None, notes)
    deriv = proj.coefficient(1)
    cert = _certificate(proj)

    if is_ac:
        notes.append("anticyclotomic direction: excluded from the derivative criterion; "
                     "growth number taken from the supplied free rank")
        inp = GrowthFormulaInput(ctx.ac_free_rank, ctx.ac_torsion, prime=L.prime)
        table = _table(inp, ctx.n_max, notes)
        lam = mu = None
        if ctx.ac_torsion is not None:
            try:
                mu, lam = mu_lambda(ctx.ac_torsion)
            except PrecisionError:
                pass
        verdict = TorsionVerdict.TORSION if ctx.ac_free_rank == 0 else TorsionVerdict.NOT_TORSION
        return GrowthReport(direction, direction.chart, deriv, None, cert, verdict,
                            lam, mu, ctx.ac_free_rank, mazur_c, table, notes)

    closed = closed_form_derivative(L, direction)
    if not (deriv == closed):
        notes.append("MISMATCH: projected derivative differs from the closed form")
        log.error("derivative mismatch along %s", direction.label())

    certified = cert.kind is NonVanishingKind.CERTIFIED
    if certified or ctx.height_nonzero:
        verdict = TorsionVerdict.TORSION
        predicted = 0
        if not certified:
            notes.append("torsion follows from the nonzero height, but the projection "
                         "is not resolved at this precision")
    else:
        verdict = TorsionVerdict.INDETERMINATE
        predicted = None
        notes.append("neither the height nor the projection certifies nonvanishing")

    table = lam = mu = None
    if certified:
        inp = GrowthFormulaInput(0, proj)
        table = _table(inp, ctx.n_max, notes)
        try:
            mu, lam = mu_lambda(proj)
        except PrecisionError as exc:
            notes.append(f"lambda/mu undetermined: {exc}")
        notes.append("corank table uses the projected L-function as characteristic "
                     "series; under h-IMC it bounds the true table from above")
    return GrowthReport(direction, direction.chart, deriv, closed, cert, verdict,
                        lam, mu, predicted, mazur_c, table, notes)


def _table(inp: GrowthFormulaInput, n_max: int, notes: list):
    try:
        return corank_table(inp, n_max)
    except PrecisionError as exc:
        notes.append(f"corank table indeterminate: {exc}")
        return None


def analyze(L: TwoVarLFunction, directions: list, height: HeightValue,
            ac_free_rank: int = 1, setting: MazurSetting | None = None,
            ac_torsion: PowerSeries1 | None = None, n_max: int = N_MAX_DEFAULT,
            workers: int = 1) -> list[GrowthReport]:
    """One GrowthReport per direction, in input order."""
    setting = setting or MazurSetting()
    restriction = restrict_anticyclotomic(L.series)
    if not restriction.vanishing:
        raise PreconditionError(
            "L(X, 0) does not vanish to working precision; the sign -1 vanishing fails"
        )
    common = []
    if H_IMC_ASSUMED not in L.hypothesis_flags:
        common.append("h-IMC not flagged: torsion conclusions are conditional on it")
    nonzero, hnotes = _height_status(L, height)
    common.extend(hnotes)
    ctx = _Context(L, nonzero, common, ac_free_rank, ac_torsion, setting, n_max)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(lambda d: _analyze_one(ctx, d), directions))
    return [_analyze_one(ctx, d) for d in directions]
