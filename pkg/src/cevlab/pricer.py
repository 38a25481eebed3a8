"""Option values as the convolution of the payoff with the CEV transition density.

The integral over the terminal level ``eta`` is carried out in ``s = sqrt(y(eta))``,
the Bessel-process coordinate, where the density is close to a Gaussian of
width ``sqrt(t)`` around ``sqrt(y(x))``. This removes the slow algebraic
decay the integrand has in ``eta`` when ``alpha > 1`` and absorbs the power
behaviour at the lower endpoint.

For ``alpha < 1`` the absorbed mass ``Q(-nu, y(x)/2t)`` is paid out at
``Phi(0+)``. For ``alpha > 1`` the partial integrals over ``(0, M)`` are
reported for a geometric sequence of radii so callers can see whether the
improper integral has settled.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .kernel import log_eval_y, mass
from .transforms import DomainError, ModelParams, nu_of_alpha, x_to_y, y_to_x


class PayoffKind(enum.Enum):
    CALL = "Call"
    PUT = "Put"
    LINEAR = "Linear"
    CONSTANT = "Constant"
    TABULATED = "Tabulated"


@dataclass(frozen=True)
class Payoff:
    """Exercise function ``Phi``; build with the classmethods."""

    kind: PayoffKind
    strike: Optional[float] = None
    constant: float = 0.0
    knots: tuple = ()
    slope: float = 0.0

    def __post_init__(self):
        if self.kind in (PayoffKind.CALL, PayoffKind.PUT) and not (self.strike and self.strike > 0):
            raise DomainError("call and put payoffs need K > 0")
        if self.kind is PayoffKind.TABULATED:
            xs = [k[0] for k in self.knots]
            if len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
                raise DomainError("tabulated knots must be strictly increasing in x")

    @classmethod
    def call(cls, strike: float):
        return cls(PayoffKind.CALL, strike=float(strike))

    @classmethod
    def put(cls, strike: float):
        return cls(PayoffKind.PUT, strike=float(strike))

    @classmethod
    def linear(cls):
        return cls(PayoffKind.LINEAR)

    @classmethod
    def const(cls, c: float):
        return cls(PayoffKind.CONSTANT, constant=float(c))

    @classmethod
    def tabulated(cls, knots: Sequence[tuple], slope: float = 0.0):
        return cls(PayoffKind.TABULATED, knots=tuple((float(a), float(b)) for a, b in knots), slope=float(slope))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k is PayoffKind.CALL:
            out = np.maximum(x - self.strike, 0.0)
        elif k is PayoffKind.PUT:
            out = np.maximum(self.strike - x, 0.0)
        elif k is PayoffKind.LINEAR:
            out = x.copy()
        elif k is PayoffKind.CONSTANT:
            out = np.full_like(x, self.constant)
        else:
            kx = np.array([p[0] for p in self.knots])
            kv = np.array([p[1] for p in self.knots])
            out = np.interp(x, kx, kv)
            out = np.where(x > kx[-1], kv[-1] + self.slope * (x - kx[-1]), out)
        return float(out) if out.ndim == 0 else out

    @property
    def kinks(self) -> tuple:
        if self.kind in (PayoffKind.CALL, PayoffKind.PUT):
            return (self.strike,)
        if self.kind is PayoffKind.TABULATED:
            return tuple(p[0] for p in self.knots)
        return ()

    @property
    def smooth(self) -> bool:
        return not self.kinks

    def at_zero(self) -> float:
        return float(self(0.0))


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000
    # None -> scale * 2**(24 + j), j = 0..7, with scale = max(x, kinks, 1)
    truncation_radii: Optional[tuple] = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0 and self.max_subdivisions > 0):
            raise DomainError("quadrature tolerances and subdivision limit must be positive")
        if self.truncation_radii is not None and len(self.truncation_radii) < 3:
            raise DomainError("need at least 3 truncation radii")

    def radii(self, scale: float) -> tuple:
        if self.truncation_radii is not None:
            return tuple(float(m) for m in self.truncation_radii)
        return tuple(scale * 2.0 ** (24 + j) for j in range(8))


@dataclass
class PriceResult:
    value: float
    est_error: float
    singular_contribution: float = 0.0
    truncation_series: list = field(default_factory=list)
    converged: bool = True

    def as_record(self) -> dict:
        return {
            "value": self.value,
            "est_error": self.est_error,
            "singular_contribution": self.singular_contribution,
            "converged": self.converged,
            "truncation_series": [[m, p] for m, p in self.truncation_series],
        }


_WIDTH = 38.0  # Gaussian half-width (in sqrt(t)) beyond which exp(-s^2/2) < 1e-300


def _integrate(f, lo, hi, pts, cfg: QuadratureConfig):
    if hi <= lo:
        return 0.0, 0.0
    inner = sorted({p for p in pts if lo < p < hi})
    val, err = quad(
        f, lo, hi, points=inner or None, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, limit=cfg.max_subdivisions
    )
    return val, err


def price_convolution(
    params: ModelParams,
    payoff: Payoff,
    t: float,
    x: float,
    cfg: Optional[QuadratureConfig] = None,
) -> PriceResult:
    """Value ``int_0^inf Phi(eta) Ebar(t, x; eta) d eta`` (plus absorbed mass for alpha < 1).

    Parameters
    ----------
    params : ModelParams
        ``alpha`` must differ from 1 (use :func:`cevlab.exact.bs_price` there).
    payoff : Payoff
    t, x : float
        Time to expiry and current level, both positive.
    cfg : QuadratureConfig, optional

    Returns
    -------
    PriceResult
        ``converged`` is False when the partial integrals over ``(0, M)`` have
        not settled to ``rel_tol`` over the last two radii.
    """
    cfg = cfg or QuadratureConfig()
    if params.alpha == 1.0:
        raise DomainError("alpha = 1: the kernel degenerates; use exact.bs_price for this regime")
    if not (t > 0 and x > 0):
        raise DomainError("price_convolution needs t > 0 and x > 0")
    nu = nu_of_alpha(params.alpha)
    y0 = x_to_y(x, params)
    s0, w = math.sqrt(y0), math.sqrt(t)
    increasing = params.alpha < 1  # eta increases with s

    def eta_of(s):
        return y_to_x(s * s, params)

    def s_of(eta):
        return math.sqrt(x_to_y(eta, params))

    def integrand(s):
        if s <= 0.0:
            return 0.0
        lv = log_eval_y(t, s * s, y0, nu)
        if lv < -745.0:
            return 0.0
        phi = float(payoff(eta_of(s)))
        return phi * 2.0 * s * math.exp(lv) if phi != 0.0 else 0.0

    lo = max(0.0, s0 - _WIDTH * w)
    hi = s0 + _WIDTH * w + (0.0 if increasing else 2.0 * w * math.sqrt(2.0 * nu + 2.0))
    pts = [s0, s0 - 3 * w, s0 + 3 * w, s0 - w, s0 + w]
    kink_s = [s_of(k) for k in payoff.kinks if k > 0]
    pts += kink_s

    # payoff support restricts the range for call and put
    lo_eff, hi_eff = lo, hi
    if payoff.kind.value in ("Call", "Put"):
        sk = kink_s[0]
        upper_side = (payoff.kind.value == "Call") == increasing
        if upper_side:
            lo_eff = max(lo, sk)
        else:
            hi_eff = min(hi, sk)

    val, err = _integrate(integrand, lo_eff, hi_eff, pts, cfg)

    singular = 0.0
    if nu < 0:
        acc = mass(t, y0, params.alpha)
        singular = acc.singular_weight * payoff.at_zero()

    value = val + singular
    series = []
    converged = True
    if nu > 0:
        scale = max([x, 1.0] + list(payoff.kinks))
        for m in cfg.radii(scale):
            # eta > M  <=>  s < s(M) for alpha > 1
            tail, terr = _integrate(integrand, 0.0, min(s_of(m), hi_eff), [p for p in pts if p < s_of(m)], cfg)
            series.append((m, val - tail))
            err += terr
        if len(series) >= 2:
            d = abs(series[-1][1] - series[-2][1])
            converged = d <= max(cfg.rel_tol * abs(value), cfg.abs_tol)
    return PriceResult(float(value), float(err), float(singular), series, converged)


def price_call(params: ModelParams, t: float, x: float, strike: float, cfg: Optional[QuadratureConfig] = None):
    """Convolution price of ``max(eta - K, 0)``."""
    return price_convolution(params, Payoff.call(strike), t, x, cfg)


def price_put(params: ModelParams, t: float, x: float, strike: float, cfg: Optional[QuadratureConfig] = None):
    return price_convolution(params, Payoff.put(strike), t, x, cfg)


def martingale_defect(params: ModelParams, t: float, x: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """``x - E_x[F_t]``: zero for ``alpha <= 1``, positive for ``alpha > 1``.

    Floating-point noise below zero is clipped.
    """
    res = price_convolution(params, Payoff.linear(), t, x, cfg)
    return max(x - res.value, 0.0)


def parity_gap(params: ModelParams, t: float, x: float, strike: float, cfg: Optional[QuadratureConfig] = None) -> float:
    """``C - P - (x - K)``; nonzero exactly when the price process loses mean."""
    c = price_call(params, t, x, strike, cfg).value
    p = price_put(params, t, x, strike, cfg).value
    return c - p - (x - strike)


def price_grid(params: ModelParams, payoff: Payoff, ts, xs, cfg: Optional[QuadratureConfig] = None, workers: int = 1):
    """Convolution prices on a ``(t, x)`` grid; rows follow ``ts``.

    Points are independent, so ``workers > 1`` evaluates them in a thread pool;
    the result does not depend on the evaluation order.
    """
    ts, xs = list(ts), list(xs)
    jobs = [(t, x) for t in ts for x in xs]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(lambda j: price_convolution(params, payoff, j[0], j[1], cfg).value, jobs))
    else:
        vals = [price_convolution(params, payoff, t, x, cfg).value for t, x in jobs]
    return np.array(vals).reshape(len(ts), len(xs))
