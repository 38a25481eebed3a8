import math

import numpy as np
import pytest
import sympy as sp

from cevlab import exact
from cevlab.specfun import normal_cdf
from cevlab.transforms import DomainError, ModelParams, Side, feller_params


def test_stationary_examples():
    assert exact.stationary(0, 1, 3.7) == 3.7
    assert exact.stationary(5, 0, 123.0) == 5
    assert exact.stationary(1, 2, 0.0) == 1


def test_feller_power_value(p2):
    # t^(-3/2) exp(-y/2t), y(1) = 1 at alpha=2, sigma=1
    assert exact.feller_power(1.0, 1.0, p2) == pytest.approx(math.exp(-0.5), rel=1e-15)


def test_printed_exponent_is_not_a_solution():
    # the form exp(-2 x^(-1/nu) / (sigma^2 nu^2 t)) fails the equation; the
    # implemented form exp(-2 nu^2 x^(-1/nu) / (sigma^2 t)) solves it
    t, x = sp.symbols("t x", positive=True)
    nu, s = sp.Rational(1, 2), 1
    printed = t ** (-nu - 1) * sp.exp(-2 * x ** (-1 / nu) / (s**2 * nu**2 * t))
    used = t ** (-nu - 1) * sp.exp(-2 * nu**2 * x ** (-1 / nu) / (s**2 * t))
    op = lambda u: sp.simplify(sp.diff(u, t) - sp.Rational(1, 2) * s**2 * x**4 * sp.diff(u, x, 2))
    assert op(used) == 0
    assert op(printed) != 0


def test_feller_power_limits(p2):
    assert exact.feller_power(1e-3, 0.5, p2) < 1e-300
    sups = [np.max(exact.feller_power(t, np.geomspace(1e-2, 1e3, 400), p2)) for t in (1.0, 0.1, 0.01)]
    assert sups[0] < sups[1] < sups[2]
    with pytest.raises(DomainError):
        exact.feller_power(0.0, 1.0, p2)


def test_bounded_alpha2_examples():
    assert exact.bounded_alpha2(1.0, 1.0, 1.0) == pytest.approx(1 - 2 * normal_cdf(-1.0), rel=1e-15)
    assert exact.bounded_alpha2(1.0, 1.0, 1.0) == pytest.approx(0.682690, abs=1e-6)
    assert exact.bounded_alpha2(1e-8, 2.0, 1.0) == pytest.approx(2.0, rel=1e-14)
    assert exact.bounded_alpha2(1.0, 1e7, 1.0) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-9)


def test_bounded_alpha2_dominance_and_monotonicity():
    from scipy.special import erfc

    ts = np.geomspace(5e-2, 10, 20)
    for x in (0.5, 1.0, 5.0, 50.0):
        u = exact.bounded_alpha2(ts, x, 1.3)
        # x - U_b = x erfc(1 / (sigma x sqrt(2t))), positive even where it rounds away in u
        gap = x * erfc(1 / (1.3 * x * np.sqrt(2 * ts)))
        assert np.all(u > 0) and np.all(u <= x) and np.all(gap > 0)
        assert np.all(np.diff(gap) > 0)
        resolved = gap > 1e-12 * x
        assert np.all(u[resolved] < x)
        assert np.all(np.diff(u[resolved]) < 0)


@pytest.mark.parametrize(
    "fn, params, t",
    [
        (lambda t, x: exact.stationary(0.4, 2.0, x) + 0 * t, ModelParams(0.7, 1.0), 1.0),
        (lambda t, x: exact.feller_power(t, x, ModelParams(2.0, 1.0)), ModelParams(2.0, 1.0), 0.8),
        (lambda t, x: exact.feller_power(t, x, ModelParams(3.0, 0.7)), ModelParams(3.0, 0.7), 0.8),
        (lambda t, x: exact.bounded_alpha2(t, x, 1.0), ModelParams(2.0, 1.0), 1.0),
        (lambda t, x: exact.bs_price(x, 1.0, 0.2, t), ModelParams(1.0, 0.2), 1.0),
    ],
)
def test_pde_residual_second_order(fn, params, t):
    xs = np.linspace(0.6, 1.8, 7)
    r1 = np.max(np.abs(exact.pde_residual(fn, params, t, xs, 1e-2)))
    r2 = np.max(np.abs(exact.pde_residual(fn, params, t, xs, 5e-3)))
    assert r2 < 1e-8 or r2 < 0.3 * r1


def test_bs_examples():
    assert exact.bs_price(1.0, 1.0, 0.2, 1.0) == pytest.approx(2 * normal_cdf(0.1) - 1, rel=1e-14)
    assert exact.bs_price(1.3, 1e-12, 0.2, 1.0) == pytest.approx(1.3, rel=1e-10)
    assert exact.bs_price(1.3, 1.0, 0.2, 1e-12) == pytest.approx(0.3, rel=1e-10)
    assert exact.bs_price(0.7, 1.0, 0.2, 1e-12) == pytest.approx(0.0, abs=1e-12)


def test_bs_against_lognormal_quadrature():
    from scipy.integrate import quad

    s, t, x, k = 0.3, 2.0, 1.1, 0.9
    sq = s * math.sqrt(t)
    f = lambda z: max(x * math.exp(sq * z - sq * sq / 2) - k, 0) * math.exp(-z * z / 2) / math.sqrt(2 * math.pi)
    assert exact.bs_price(x, k, s, t) == pytest.approx(quad(f, -12, 12, points=[0.0])[0], rel=1e-9)


def test_separable_limits():
    fp = feller_params(0.5)
    assert abs(exact.separable(50.0, 1.0, fp, 1.0, 1.0, 0.5)) < 1e-20
    assert exact.separable(1.0, 2.0, fp, 1.0, 0.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        exact.separable(1.0, 0.0, fp, 1.0, 1.0, 0.0)


def test_separable_residual_is_reported():
    r = exact.separable_residual(feller_params(0.5), 1.0, 1.0, 0.0, [0.5, 1.0], [0.5, 1.0, 2.0])
    assert math.isfinite(r) and r >= 0.0


def test_catalog_dispatch(p2):
    sol = exact.ExactSolution(exact.Kind.BOUNDED_ALPHA2, p2)
    assert sol(1.0, 1.0) == exact.bounded_alpha2(1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        exact.ExactSolution(exact.Kind.BLACK_SCHOLES, p2, {"K": 1.0})
    st = exact.ExactSolution(exact.Kind.STATIONARY, p2, {"C1": 1.0, "C2": 2.0})
    assert st(0.3, 2.0) == 5.0
