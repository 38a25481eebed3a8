"""Closed-form solutions of ``U_t = 0.5 sigma^2 x^(2 alpha) U_xx`` used as oracles."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .specfun import bessel_jy, normal_cdf
from .transforms import DomainError, FellerParams, ModelParams, nu_of_alpha, x_to_y


def stationary(c1: float, c2: float, x):
    """``C1 + C2 x``, a solution for every ``alpha``."""
    out = c1 + c2 * np.asarray(x, dtype=float)
    return float(out) if out.ndim == 0 else out


def feller_power(t, x, params: ModelParams):
    """Power solution ``t**(-nu-1) exp(-y(x) / 2t)`` with ``y(x) = 4 nu^2 x**(-1/nu) / sigma^2``.

    It vanishes pointwise as ``t -> 0`` for ``x > 0`` while its supremum in
    ``x`` blows up, so it is bounded at each time but not uniformly.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0):
        raise DomainError("feller_power needs t > 0")
    nu = nu_of_alpha(params.alpha)
    y = x_to_y(np.asarray(x, dtype=float), params)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        out = np.power(t_arr, -nu - 1.0) * np.exp(-y / (2.0 * t_arr))
    return float(out) if out.ndim == 0 else out


def bounded_alpha2(t, x, sigma: float):
    """Bounded solution at ``alpha = 2``: ``x (1 - 2 Phi(-1 / (sigma x sqrt t)))``.

    Equals the expectation of the CEV price at ``alpha = 2``; it lies strictly
    below the stationary solution ``x`` and tends to ``sqrt(2/pi) / (sigma sqrt t)``
    as ``x -> inf``.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        arg = -1.0 / (sigma * x * np.sqrt(t))
    # 1 - 2 Phi(-a) = erf(a / sqrt 2); the erf form keeps precision for large x
    from scipy.special import erf

    out = x * erf(-arg / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def separable(t, y, feller: FellerParams, k: float, c1: float, c2: float, amplitude: float = 1.0):
    """Separable product ``K e^{-kt} y^{-nu/2} [C1 J_{-nu}(sqrt(2cy)) + C2 Y_{-nu}(sqrt(2cy))]``.

    Evaluated exactly as written; see :func:`separable_residual` for how well
    it satisfies the Feller equation.
    """
    if not k > 0:
        raise DomainError("k must be positive")
    if np.any(np.asarray(y) <= 0):
        raise DomainError("separable needs y > 0")
    if c1 == 0 and c2 == 0:
        return 0.0 if np.ndim(y) == 0 and np.ndim(t) == 0 else np.zeros(np.broadcast(t, y).shape)
    nu, c = feller.nu, feller.c

    def u2(yy: float) -> float:
        arg = math.sqrt(2.0 * c * yy) if c * yy > 0 else float("nan")
        j, yv = bessel_jy(-nu, arg)
        return yy ** (-nu / 2.0) * (c1 * j + c2 * yv)

    u1 = amplitude * np.exp(-k * np.asarray(t, dtype=float))
    u2v = np.vectorize(u2, otypes=[float])(np.asarray(y, dtype=float))
    out = u1 * u2v
    return float(out) if np.ndim(out) == 0 else out


def separable_residual(feller: FellerParams, k: float, c1: float, c2: float, ts, ys, h: float = 1e-4) -> float:
    """Max of ``|u_t - (a y u)_yy + (c u)_y| / max|u|`` on a sample, by centered differences."""
    a, c = feller.a, feller.c
    worst, scale = 0.0, 0.0
    for t in np.atleast_1d(ts):
        for y in np.atleast_1d(ys):
            f = lambda tt, yy: separable(tt, yy, feller, k, c1, c2)
            u = f(t, y)
            ut = (f(t + h, y) - f(t - h, y)) / (2 * h)
            hy = h * max(y, 1.0)
            ayu = [a * (y + d * hy) * f(t, y + d * hy) for d in (-1, 0, 1)]
            cu = [c * f(t, y + d * hy) for d in (-1, 1)]
            lhs = ut - (ayu[2] - 2 * ayu[1] + ayu[0]) / hy**2 + (cu[1] - cu[0]) / (2 * hy)
            worst = max(worst, abs(lhs))
            scale = max(scale, abs(u))
    return worst / scale if scale > 0 else 0.0


def bs_price(x, strike: float, sigma: float, t):
    """Undiscounted Black-Scholes call ``x N(d1) - K N(d2)`` (the ``alpha = 1`` oracle)."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    sq = sigma * np.sqrt(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(x / strike) + 0.5 * sq * sq) / sq
    d2 = d1 - sq
    out = x * normal_cdf(d1) - strike * normal_cdf(d2)
    out = np.where(x > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


class Kind(enum.Enum):
    STATIONARY = "Stationary"
    SEPARABLE = "Separable"
    FELLER_POWER = "FellerPower"
    BOUNDED_ALPHA2 = "BoundedAlpha2"
    BLACK_SCHOLES = "BlackScholes"


@dataclass(frozen=True)
class ExactSolution:
    """A catalog entry bound to its model parameters, callable as ``sol(t, x)``."""

    kind: Kind
    params: ModelParams
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind is Kind.BOUNDED_ALPHA2 and self.params.alpha != 2:
            raise DomainError("BoundedAlpha2 requires alpha = 2")
        if self.kind is Kind.BLACK_SCHOLES and self.params.alpha != 1:
            raise DomainError("BlackScholes requires alpha = 1")

    def __call__(self, t, x):
        p, k = self.params, self.coeffs
        if self.kind is Kind.STATIONARY:
            return stationary(k.get("C1", 0.0), k.get("C2", 1.0), x) + 0.0 * np.asarray(t)
        if self.kind is Kind.FELLER_POWER:
            return feller_power(t, x, p)
        if self.kind is Kind.BOUNDED_ALPHA2:
            return bounded_alpha2(t, x, p.sigma)
        if self.kind is Kind.BLACK_SCHOLES:
            return bs_price(x, k["K"], p.sigma, t)
        if self.kind is Kind.SEPARABLE:
            from .transforms import feller_params

            y = x_to_y(x, p)
            return separable(t, y, feller_params(p.alpha), k["k"], k.get("C1", 1.0), k.get("C2", 0.0))
        raise AssertionError(self.kind)


def pde_residual(fn: Callable, params: ModelParams, t: float, xs, h: float) -> np.ndarray:
    """Centered-difference residual ``U_t - 0.5 sigma^2 x^(2 alpha) U_xx`` at points ``xs``."""
    xs = np.asarray(xs, dtype=float)
    ut = (fn(t + h, xs) - fn(t - h, xs)) / (2 * h)
    uxx = (fn(t, xs + h) - 2 * fn(t, xs) + fn(t, xs - h)) / h**2
    return ut - 0.5 * params.sigma**2 * xs ** (2 * params.alpha) * uxx
