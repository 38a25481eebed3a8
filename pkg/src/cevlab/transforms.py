"""Coordinate maps, Feller parameters and well-posedness decision tables.

The CEV pricing equation ``U_t = 0.5 * sigma**2 * x**(2*alpha) * U_xx`` is mapped
onto the Feller equation ``u_t = (2 y u)_yy - (c u)_y`` by

    y = x**(2*(1 - alpha)) / (sigma**2 * (1 - alpha)**2)

The functions here are pure; every decision table is a plain function of
``alpha`` (and a growth class) so it can be tested exhaustively.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class ModelParams:
    """CEV scenario: exponent ``alpha``, volatility scale ``sigma`` and horizon (years)."""

    alpha: float
    sigma: float
    horizon: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "sigma", "horizon"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be a positive finite number, got {v!r}")

    @property
    def nu(self) -> float:
        return nu_of_alpha(self.alpha)


class Side(enum.Enum):
    PRICING_TRANSFORM = "PricingTransform"
    PROCESS_DENSITY = "ProcessDensity"


@dataclass(frozen=True)
class FellerParams:
    c: float
    nu: float
    a: float = 2.0
    b: float = 0.0


class ZeroBoundary(enum.Enum):
    CONDITION_REQUIRED = "ConditionRequired"
    ABSORBING_NO_CONDITION = "AbsorbingNoCondition"
    INHERITED_NO_CONDITION = "InheritedNoCondition"


class FarBoundary(enum.Enum):
    CONDITION_REQUIRED = "ConditionRequired"
    NO_CONDITION = "NoCondition"


@dataclass(frozen=True)
class BoundaryClassification:
    at_zero: ZeroBoundary
    at_infinity: FarBoundary
    feller_c_process: float


class GrowthKind(enum.Enum):
    BOUNDED = "Bounded"
    SUBLINEAR_POWER = "SublinearPower"
    LINEAR = "Linear"
    SUPERLINEAR_POWER = "SuperlinearPower"
    EXP_POWER = "ExpPower"


@dataclass(frozen=True)
class GrowthClass:
    """Growth of initial data at infinity.

    ``param`` is the power ``p`` for the power classes and the exponent ``beta``
    of ``exp(x**beta)`` for ``EXP_POWER``.
    """

    kind: GrowthKind
    param: Optional[float] = None

    def __post_init__(self):
        p = self.param
        if self.kind is GrowthKind.SUBLINEAR_POWER and not (p is not None and 0 <= p < 1):
            raise DomainError("SublinearPower needs p in [0, 1)")
        if self.kind is GrowthKind.SUPERLINEAR_POWER and not (p is not None and p > 1):
            raise DomainError("SuperlinearPower needs p > 1")
        if self.kind is GrowthKind.EXP_POWER and not (p is not None and p > 0):
            raise DomainError("ExpPower needs beta > 0")

    @classmethod
    def bounded(cls):
        return cls(GrowthKind.BOUNDED)

    @classmethod
    def sublinear(cls, p: float):
        return cls(GrowthKind.SUBLINEAR_POWER, p)

    @classmethod
    def linear(cls):
        return cls(GrowthKind.LINEAR)

    @classmethod
    def superlinear(cls, p: float):
        return cls(GrowthKind.SUPERLINEAR_POWER, p)

    @classmethod
    def exp_power(cls, beta: float):
        return cls(GrowthKind.EXP_POWER, beta)

    def __str__(self):
        return self.kind.value if self.param is None else f"{self.kind.value}({self.param:g})"


class Status(enum.Enum):
    UNIQUE = "Unique"
    NON_UNIQUE = "NonUnique"
    UNDERDETERMINED = "Underdetermined"


class Reason(enum.Enum):
    INSIDE_TACKLIND_CLASS = "InsideTacklindClass"
    OUTSIDE_UNIQUENESS_CLASS = "OutsideUniquenessClass"
    MISSING_FAR_FIELD_CONDITION = "MissingFarFieldCondition"
    MISSING_ZERO_CONDITION = "MissingZeroCondition"
    SUBLINEAR_CLASS_UNIQUE = "SublinearClassUnique"


@dataclass(frozen=True)
class Verdict:
    status: Status
    reason: Reason

    def __post_init__(self):
        if self.status is Status.NON_UNIQUE and self.reason is not Reason.OUTSIDE_UNIQUENESS_CLASS:
            raise ValueError("NonUnique verdicts carry OutsideUniquenessClass")
        if self.status is Status.UNDERDETERMINED and self.reason not in (
            Reason.MISSING_FAR_FIELD_CONDITION,
            Reason.MISSING_ZERO_CONDITION,
        ):
            raise ValueError("Underdetermined verdicts name the missing boundary")

    def __str__(self):
        return f"{self.status.value}({self.reason.value})"


def _check_alpha(alpha: float, allow_one: bool = False) -> float:
    alpha = float(alpha)
    if not (math.isfinite(alpha) and alpha > 0):
        raise DomainError(f"alpha must be positive, got {alpha!r}")
    if not allow_one and alpha == 1.0:
        raise DomainError("alpha = 1 is the log-transform (Black-Scholes) regime; use exact.bs_price")
    return alpha


def nu_of_alpha(alpha: float) -> float:
    """Bessel index ``-1 / (2 (1 - alpha))``; defined for ``alpha != 1``.

    ``alpha = 0`` is accepted here (heat equation limit) even though model
    parameters require a positive exponent.
    """
    alpha = float(alpha)
    if alpha == 1.0:
        raise DomainError("nu is undefined at alpha = 1 (log-transform regime, see exact.bs_price)")
    if not math.isfinite(alpha) or alpha < 0:
        raise DomainError(f"alpha must be nonnegative, got {alpha!r}")
    return -1.0 / (2.0 * (1.0 - alpha))


def feller_params(alpha: float, side: Side = Side.PRICING_TRANSFORM) -> FellerParams:
    """Feller coefficients ``a=2, b=0`` and drift ``c`` for the requested side.

    The pricing transform yields ``c = (3 - 2 alpha) / (1 - alpha)``; the SDE
    for ``Y`` driving the process density has ``c = (1 - 2 alpha) / (1 - alpha)``.
    ``nu`` is ``1 - c/a`` on either side.
    """
    alpha = _check_alpha(alpha)
    side = Side(side)
    if side is Side.PRICING_TRANSFORM:
        c = (3.0 - 2.0 * alpha) / (1.0 - alpha)
    else:
        c = (1.0 - 2.0 * alpha) / (1.0 - alpha)
    return FellerParams(c=c, nu=1.0 - c / 2.0)


def x_to_y(x, params: ModelParams):
    """Map asset level ``x`` to the Feller coordinate ``y``.

    Works on scalars and arrays. ``x = 0`` maps to ``0`` for ``alpha < 1``; for
    ``alpha > 1`` it maps to infinity, which raises for scalars.
    """
    alpha = _check_alpha(params.alpha)
    beta = 1.0 - alpha
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("x must be nonnegative")
    if alpha > 1 and np.any(xa == 0):
        if xa.ndim == 0:
            raise DomainError("x = 0 maps to y = +inf for alpha > 1")
    with np.errstate(divide="ignore"):
        y = np.power(xa, 2.0 * beta) / (params.sigma**2 * beta**2)
    return float(y) if y.ndim == 0 else y


def y_to_x(y, params: ModelParams):
    """Inverse of :func:`x_to_y`."""
    alpha = _check_alpha(params.alpha)
    beta = 1.0 - alpha
    ya = np.asarray(y, dtype=float)
    if np.any(ya < 0):
        raise DomainError("y must be nonnegative")
    with np.errstate(divide="ignore"):
        x = np.power(params.sigma**2 * beta**2 * ya, 1.0 / (2.0 * beta))
    return float(x) if x.ndim == 0 else x


def dy_dx(x, params: ModelParams):
    """Derivative of :func:`x_to_y`; used as the Jacobian of the kernel pullback."""
    alpha = _check_alpha(params.alpha)
    beta = 1.0 - alpha
    xa = np.asarray(x, dtype=float)
    d = 2.0 * np.power(xa, 2.0 * beta - 1.0) / (params.sigma**2 * beta)
    return float(d) if d.ndim == 0 else d


def classify_boundary(alpha: float) -> BoundaryClassification:
    """Where the pricing problem needs boundary data.

    Zero is attainable for ``alpha < 1`` (data needed only when ``alpha < 1/2``);
    infinity needs data only when ``alpha > 3/2``. ``1/2`` and ``3/2`` fall in
    the no-condition regime.
    """
    alpha = _check_alpha(alpha, allow_one=True)
    if alpha < 0.5:
        zero = ZeroBoundary.CONDITION_REQUIRED
    elif alpha < 1.0:
        zero = ZeroBoundary.ABSORBING_NO_CONDITION
    else:
        zero = ZeroBoundary.INHERITED_NO_CONDITION
    far = FarBoundary.CONDITION_REQUIRED if alpha > 1.5 else FarBoundary.NO_CONDITION
    c_proc = math.inf if alpha == 1.0 else (1.0 - 2.0 * alpha) / (1.0 - alpha)
    return BoundaryClassification(zero, far, c_proc)


def uniqueness_verdict(alpha: float, growth: GrowthClass, zero_data: bool = False) -> Verdict:
    """Decide well-posedness of the Cauchy problem for data of the given growth.

    ``zero_data`` states whether boundary data at ``x = 0`` are supplied; it only
    matters for ``alpha < 1/2``.
    """
    alpha = _check_alpha(alpha, allow_one=True)
    kind = growth.kind
    if alpha > 1.5:
        return Verdict(Status.UNDERDETERMINED, Reason.MISSING_FAR_FIELD_CONDITION)
    if alpha < 0.5 and not zero_data:
        return Verdict(Status.UNDERDETERMINED, Reason.MISSING_ZERO_CONDITION)
    if alpha > 1.0:
        if kind in (GrowthKind.BOUNDED, GrowthKind.SUBLINEAR_POWER):
            return Verdict(Status.UNIQUE, Reason.SUBLINEAR_CLASS_UNIQUE)
        return Verdict(Status.NON_UNIQUE, Reason.OUTSIDE_UNIQUENESS_CLASS)
    # alpha <= 1: Tacklind envelope exp(G h(G)), G ~ x**(1-alpha), h(s) <= s.
    if kind is GrowthKind.EXP_POWER and growth.param > 2.0 * (1.0 - alpha):
        return Verdict(Status.NON_UNIQUE, Reason.OUTSIDE_UNIQUENESS_CLASS)
    return Verdict(Status.UNIQUE, Reason.INSIDE_TACKLIND_CLASS)


def tacklind_envelope(alpha: float, x: float, h_power: float, s0: float = 1.0) -> float:
    """Envelope ``exp(G(x) h(G(x)))`` with ``G = int_{s0}^x s**-alpha ds`` and ``h(s) = s**p``.

    Only defined for ``alpha <= 1`` where ``G`` diverges, and ``p <= 1`` so that
    ``int 1/h`` diverges. Overflow returns ``inf``.
    """
    alpha = float(alpha)
    if alpha > 1:
        raise DomainError("the envelope at infinity needs alpha <= 1")
    if h_power > 1:
        raise DomainError("h(s) = s**p with p > 1 is not a Tacklind function")
    if not (s0 > 0 and x > s0):
        raise DomainError("need x > s0 > 0")
    if alpha == 1.0:
        g = math.log(x / s0)
    else:
        g = (x ** (1.0 - alpha) - s0 ** (1.0 - alpha)) / (1.0 - alpha)
    expo = g * g**h_power
    return math.exp(expo) if expo < 709.0 else math.inf


def zero_envelope(alpha: float, x: float, h_power: float) -> float:
    """Diagnostic bound ``exp(x**(1-alpha) h(x**(1-alpha)))`` near zero for ``alpha > 1``.

    Reported verbatim, not enforced anywhere.
    """
    g = x ** (1.0 - alpha)
    expo = g * g**h_power
    return math.exp(expo) if expo < 709.0 else math.inf


def classify_growth(
    fn: Callable[[np.ndarray], np.ndarray],
    grid: Optional[Sequence[float]] = None,
    tol: float = 0.05,
) -> GrowthClass:
    """Classify the growth of ``fn`` at infinity from samples on a geometric grid.

    The local log-log slope over the last decades gives the power ``p``; a slope
    that keeps increasing across the grid is read as exponential-type growth
    and ``beta`` is taken from the slope of ``log log |f|``.
    """
    xs = np.geomspace(1.0, 1e8, 33) if grid is None else np.asarray(grid, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        f = np.abs(np.asarray(fn(xs), dtype=float))
    if not np.all(np.isfinite(f)):
        return _exp_class(fn, xs)
    f = np.maximum(f, 1e-300)
    lx, lf = np.log(xs), np.log(f)
    k = max(len(xs) // 4, 2)
    slope_hi = (lf[-1] - lf[-1 - k]) / (lx[-1] - lx[-1 - k])
    slope_mid = (lf[-1 - k] - lf[-1 - 2 * k]) / (lx[-1 - k] - lx[-1 - 2 * k])
    if slope_hi > slope_mid + 1.0 and slope_hi > 2.0:
        return _exp_class(fn, xs)
    if slope_hi < tol:
        return GrowthClass.bounded()
    if abs(slope_hi - 1.0) < tol:
        return GrowthClass.linear()
    if slope_hi < 1.0:
        return GrowthClass.sublinear(float(slope_hi))
    return GrowthClass.superlinear(float(slope_hi))


def _exp_class(fn, xs) -> GrowthClass:
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        f = np.abs(np.asarray(fn(xs), dtype=float))
    ok = np.isfinite(f) & (f > math.e)
    lx = np.log(xs[ok])
    llf = np.log(np.log(f[ok]))
    if len(lx) < 2:
        raise DomainError("cannot classify growth from the supplied samples")
    beta = float((llf[-1] - llf[0]) / (lx[-1] - lx[0]))
    return GrowthClass.exp_power(beta)
