import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cevlab import transforms as tr
from cevlab.transforms import (
    DomainError,
    FarBoundary,
    GrowthClass,
    ModelParams,
    Reason,
    Side,
    Status,
    ZeroBoundary,
)

ALPHA_GRID = [0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0]
alphas = st.floats(0.05, 4.0).filter(lambda a: abs(a - 1.0) > 1e-3)


@pytest.mark.parametrize("alpha, nu", [(2.0, 0.5), (0.0, -0.5), (1.5, 1.0)])
def test_nu_examples(alpha, nu):
    assert tr.nu_of_alpha(alpha) == pytest.approx(nu, abs=1e-15)


def test_nu_undefined_at_one():
    with pytest.raises(DomainError):
        tr.nu_of_alpha(1.0)


def test_nu_sign_change_and_blowup():
    assert tr.nu_of_alpha(0.999) < -100
    assert tr.nu_of_alpha(1.001) > 100
    assert all(tr.nu_of_alpha(a) < 0 for a in (0.1, 0.5, 0.99))
    assert all(tr.nu_of_alpha(a) > 0 for a in (1.01, 2.0, 5.0))


@pytest.mark.parametrize(
    "alpha, side, c",
    [(2.0, Side.PRICING_TRANSFORM, 1.0), (0.5, Side.PROCESS_DENSITY, 0.0), (0.25, Side.PROCESS_DENSITY, 2.0 / 3.0)],
)
def test_feller_params_examples(alpha, side, c):
    fp = tr.feller_params(alpha, side)
    assert fp.c == pytest.approx(c, abs=1e-15)
    assert (fp.a, fp.b) == (2.0, 0.0)


@given(alphas)
def test_pricing_side_nu_matches(alpha):
    assert tr.feller_params(alpha).nu == pytest.approx(tr.nu_of_alpha(alpha), rel=1e-12)


@pytest.mark.parametrize(
    "alpha, sigma, x, y",
    [(2.0, 1.0, 1.0, 1.0), (0.5, 2.0, 4.0, 4.0)],
)
def test_x_to_y_examples(alpha, sigma, x, y):
    assert tr.x_to_y(x, ModelParams(alpha, sigma)) == pytest.approx(y, rel=1e-15)


def test_round_trip_example():
    p = ModelParams(0.75, 0.3)
    assert tr.y_to_x(tr.x_to_y(2.5, p), p) == pytest.approx(2.5, rel=1e-14)


def test_zero_maps_to_infinity_for_alpha_above_one():
    with pytest.raises(DomainError):
        tr.x_to_y(0.0, ModelParams(2.0, 1.0))
    assert tr.x_to_y(0.0, ModelParams(0.5, 1.0)) == 0.0


@given(alphas, st.floats(0.1, 3.0), st.floats(1e-3, 1e3))
def test_round_trip_property(alpha, sigma, x):
    p = ModelParams(alpha, sigma)
    assert tr.y_to_x(tr.x_to_y(x, p), p) == pytest.approx(x, rel=1e-9)


@given(alphas, st.floats(0.1, 3.0))
def test_monotone_direction(alpha, sigma):
    p = ModelParams(alpha, sigma)
    y = tr.x_to_y(np.geomspace(1e-2, 1e2, 50), p)
    d = np.diff(y)
    assert np.all(d > 0) if alpha < 1 else np.all(d < 0)


def test_dy_dx_matches_finite_difference():
    for a in (0.5, 2.0, 3.0):
        p = ModelParams(a, 0.7)
        h = 1e-6
        fd = (tr.x_to_y(1.3 + h, p) - tr.x_to_y(1.3 - h, p)) / (2 * h)
        assert tr.dy_dx(1.3, p) == pytest.approx(fd, rel=1e-7)


@pytest.mark.parametrize("alpha", ALPHA_GRID)
def test_boundary_table(alpha):
    bc = tr.classify_boundary(alpha)
    assert (bc.at_zero is ZeroBoundary.CONDITION_REQUIRED) == (alpha < 0.5)
    assert (bc.at_zero is ZeroBoundary.ABSORBING_NO_CONDITION) == (0.5 <= alpha < 1)
    assert (bc.at_infinity is FarBoundary.CONDITION_REQUIRED) == (alpha > 1.5)
    if alpha != 1.0:
        assert bc.feller_c_process == pytest.approx(tr.feller_params(alpha, Side.PROCESS_DENSITY).c)


def test_boundary_examples():
    b = tr.classify_boundary(0.25)
    assert (b.at_zero, b.at_infinity) == (ZeroBoundary.CONDITION_REQUIRED, FarBoundary.NO_CONDITION)
    b = tr.classify_boundary(1.0)
    assert b.at_zero is ZeroBoundary.INHERITED_NO_CONDITION and b.at_infinity is FarBoundary.NO_CONDITION
    b = tr.classify_boundary(2.0)
    assert b.at_zero is not ZeroBoundary.CONDITION_REQUIRED and b.at_infinity is FarBoundary.CONDITION_REQUIRED


GROWTHS = [
    GrowthClass.bounded(),
    GrowthClass.sublinear(0.5),
    GrowthClass.linear(),
    GrowthClass.superlinear(3.0),
    GrowthClass.exp_power(0.2),
    GrowthClass.exp_power(3.0),
]


@pytest.mark.parametrize("alpha", ALPHA_GRID)
@pytest.mark.parametrize("growth", GROWTHS, ids=str)
def test_verdict_table(alpha, growth):
    v = tr.uniqueness_verdict(alpha, growth, zero_data=True)
    if alpha > 1.5:
        assert (v.status, v.reason) == (Status.UNDERDETERMINED, Reason.MISSING_FAR_FIELD_CONDITION)
    elif alpha > 1:
        sub = growth.kind in (tr.GrowthKind.BOUNDED, tr.GrowthKind.SUBLINEAR_POWER)
        assert v.status is (Status.UNIQUE if sub else Status.NON_UNIQUE)
    elif growth.kind is tr.GrowthKind.EXP_POWER and growth.param > 2 * (1 - alpha):
        assert v.reason is Reason.OUTSIDE_UNIQUENESS_CLASS
    else:
        assert (v.status, v.reason) == (Status.UNIQUE, Reason.INSIDE_TACKLIND_CLASS)


def test_verdict_examples():
    assert tr.uniqueness_verdict(1.0, GrowthClass.linear()).status is Status.UNIQUE
    v = tr.uniqueness_verdict(1.25, GrowthClass.linear())
    assert (v.status, v.reason) == (Status.NON_UNIQUE, Reason.OUTSIDE_UNIQUENESS_CLASS)
    v = tr.uniqueness_verdict(2.0, GrowthClass.bounded())
    assert (v.status, v.reason) == (Status.UNDERDETERMINED, Reason.MISSING_FAR_FIELD_CONDITION)


def test_zero_condition_reported_without_data():
    v = tr.uniqueness_verdict(0.25, GrowthClass.linear())
    assert v.reason is Reason.MISSING_ZERO_CONDITION
    assert tr.uniqueness_verdict(0.25, GrowthClass.linear(), zero_data=True).status is Status.UNIQUE


def test_verdict_invariants():
    with pytest.raises(ValueError):
        tr.Verdict(Status.NON_UNIQUE, Reason.MISSING_ZERO_CONDITION)
    with pytest.raises(ValueError):
        tr.Verdict(Status.UNDERDETERMINED, Reason.INSIDE_TACKLIND_CLASS)


@pytest.mark.parametrize(
    "alpha, x, p, s0, expected",
    [(1.0, math.e, 0.0, 1.0, math.e), (0.0, 3.0, 1.0, 1.0, math.exp(4.0)), (0.5, 9.0, 0.0, 1.0, math.exp(4.0))],
)
def test_tacklind_envelope_examples(alpha, x, p, s0, expected):
    assert tr.tacklind_envelope(alpha, x, p, s0) == pytest.approx(expected, rel=1e-13)


def test_tacklind_rejects_fast_h():
    with pytest.raises(DomainError):
        tr.tacklind_envelope(0.5, 4.0, 1.5)


def test_growth_class_validation():
    with pytest.raises(DomainError):
        GrowthClass.sublinear(1.0)
    with pytest.raises(DomainError):
        GrowthClass.superlinear(0.5)
    with pytest.raises(DomainError):
        GrowthClass.exp_power(0.0)


@pytest.mark.parametrize(
    "fn, kind",
    [
        (lambda x: np.ones_like(x), tr.GrowthKind.BOUNDED),
        (np.sqrt, tr.GrowthKind.SUBLINEAR_POWER),
        (lambda x: 3 * x + 1, tr.GrowthKind.LINEAR),
        (lambda x: x**2, tr.GrowthKind.SUPERLINEAR_POWER),
        (lambda x: np.exp(x**0.5), tr.GrowthKind.EXP_POWER),
    ],
)
def test_classify_growth(fn, kind):
    assert tr.classify_growth(fn).kind is kind


def test_model_params_validation():
    for bad in [(0.0, 1.0), (1.0, -1.0), (2.0, 1.0, 0.0)]:
        with pytest.raises(DomainError):
            ModelParams(*bad)
