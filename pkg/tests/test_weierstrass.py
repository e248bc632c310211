import random

import pytest

from zpgrowth.padic import PadicNumber, PrecisionError
from zpgrowth.series import PowerSeries1, PrecisionPolicy
from zpgrowth.weierstrass import (
    GrowthFormulaInput,
    Indeterminate,
    NotDivisible,
    corank_at_level,
    corank_table,
    cyclotomic_factor,
    cyclotomic_multiplicity,
    growth_number,
    mu_lambda,
    omega_poly,
    poly_mul,
    weierstrass_divide,
    weierstrass_prepare,
)

P = 5
POL = PrecisionPolicy(20, 16)


def s(values, pol=POL):
    return PowerSeries1.from_ints(P, pol, values)


def pad(x):
    return PadicNumber.from_int(P, x, 20)


def test_divide_t_squared_by_t_plus_5():
    q, r = weierstrass_divide(s([0, 0, 1]), s([5, 1]))
    assert q == PowerSeries1.from_ints(P, q.policy, [-5, 1])
    assert r.coefficient(0) == pad(25)
    assert r.coefficient(0).abs_prec >= 10


def test_divide_by_unit_and_self():
    f = s([3, 1, 4, 1, 5])
    q, r = weierstrass_divide(f, s([1]))
    assert q == f and r.is_zero_to_precision()
    q, r = weierstrass_divide(s([5, 1]), s([5, 1]))
    assert q == PowerSeries1.from_ints(P, q.policy, [1]) and r.is_zero_to_precision()


def test_divide_requires_unit_coefficient():
    with pytest.raises(NotDivisible):
        weierstrass_divide(s([1]), s([5, 25]))


def test_prepare_examples():
    d = weierstrass_prepare(s([5, 1]))
    assert (d.mu, d.lam) == (0, 1)
    assert d.distinguished[0] == pad(5) and d.distinguished[1] == pad(1)
    assert d.unit == PowerSeries1.from_ints(P, d.unit.policy, [1])

    d = weierstrass_prepare(s([5, 5]))
    assert (d.mu, d.lam) == (1, 0)
    assert d.unit == PowerSeries1.from_ints(P, d.unit.policy, [1, 1])

    f = s([0, 5, 0, 1])
    d = weierstrass_prepare(f)
    assert (d.mu, d.lam) == (0, 3)
    rec = d.reconstruct()
    assert rec == PowerSeries1(P, rec.policy, {k: c for k, c in f.coeffs.items()
                                               if k < rec.degree_bound})


def test_mu_lambda_additive():
    rng = random.Random(21)
    for _ in range(50):
        a = [P * rng.randrange(P**5) for _ in range(rng.randrange(4))] + [1, rng.randrange(P)]
        b = [P * rng.randrange(P**5) for _ in range(rng.randrange(4))] + [1]
        ma, mb = rng.randrange(3), rng.randrange(3)
        fa = s([P**ma * c for c in a])
        fb = s([P**mb * c for c in b])
        mu1, l1 = mu_lambda(fa)
        mu2, l2 = mu_lambda(fb)
        assert mu_lambda(fa * fb) == (mu1 + mu2, l1 + l2)


def test_mu_lambda_zero_to_precision():
    with pytest.raises(PrecisionError):
        mu_lambda(PowerSeries1(P, POL, {1: PadicNumber.zero(P, 20)}))


def test_omega_and_cyclotomic():
    assert omega_poly(5, 0) == [0, 1]
    assert cyclotomic_factor(5, 1) == [5, 10, 10, 5, 1]
    assert omega_poly(5, 1) == poly_mul([0, 1], cyclotomic_factor(5, 1))
    assert omega_poly(5, 2) == poly_mul(omega_poly(5, 1), cyclotomic_factor(5, 2))
    assert cyclotomic_factor(5, 3, 10) == cyclotomic_factor(5, 3)[:10]


def test_cyclotomic_multiplicity_examples():
    phi = cyclotomic_factor(P, 1)
    t_phi = s(poly_mul([0, 1], phi))
    assert cyclotomic_multiplicity(t_phi, 0) == 1
    assert cyclotomic_multiplicity(t_phi, 1) == 1
    assert cyclotomic_multiplicity(s(poly_mul(phi, phi)), 1) == 2
    assert cyclotomic_multiplicity(s([-5, 1]), 0) == 0
    assert cyclotomic_multiplicity(s([-5, 1]), 1) == 0


def test_multiplicity_starved_is_indeterminate():
    # low coefficients not even known mod p: lambda itself is undetermined
    f = PowerSeries1(P, POL, {0: PadicNumber.zero(P, 0), 1: PadicNumber.zero(P, 0), 2: pad(1)})
    with pytest.raises(PrecisionError):
        cyclotomic_multiplicity(f, 0)
    assert issubclass(Indeterminate, PrecisionError)


def test_corank_examples():
    assert [c for _, c in corank_table(GrowthFormulaInput(1, prime=P), 4)] == \
        [1, 5, 25, 125, 625]
    assert growth_number(GrowthFormulaInput(1, prime=P)) == 1
    assert [c for _, c in corank_table(GrowthFormulaInput(0, s([0, 1])), 4)] == [1] * 5
    t_phi = s(poly_mul([0, 1], cyclotomic_factor(P, 1)))
    assert [corank_at_level(GrowthFormulaInput(0, t_phi), n) for n in range(3)] == [1, 5, 5]


def test_corank_monotone_and_bounded_by_lambda():
    phi = cyclotomic_factor(P, 1)
    for coeffs in ([0, 1], phi, poly_mul([0, 1], phi), [-5, 1], poly_mul(phi, phi),
                   poly_mul([0, 0, 1], [-5, 1])):
        f = s(coeffs)
        _, lam = mu_lambda(f)
        table = [c for _, c in corank_table(GrowthFormulaInput(0, f), 6)]
        assert table == sorted(table)
        assert max(table) <= lam


def test_corank_level_range():
    with pytest.raises(ValueError):
        corank_at_level(GrowthFormulaInput(0, s([0, 1])), 7, 6)
    with pytest.raises(ValueError):
        GrowthFormulaInput(0)
