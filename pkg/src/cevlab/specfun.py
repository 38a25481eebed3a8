r"""Special functions for the Feller kernel.

``bessel_i`` returns :math:`I_\nu(z)` in exponentially scaled log form,
``log(exp(-z) I_nu(z))``, so that it can be combined with the Gaussian
factor of the kernel without overflow. Small arguments use the power series,
large arguments the Hankel expansion

.. math::
    e^{-z} I_\nu(z) \sim \frac{1}{\sqrt{2\pi z}} \sum_k (-1)^k \frac{a_k(\nu)}{z^k}.

The incomplete gamma ratio uses the series below ``z < m + 1`` and a Lentz
continued fraction for the complement above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

_LOG_2PI = math.log(2.0 * math.pi)
_EPS = 1e-17


@dataclass(frozen=True)
class ScaledBessel:
    """``log_value = log(exp(-z) * I_order(z))``; ``sign`` is +1 for ``z >= 0``."""

    log_value: float
    sign: int = 1

    def value(self, z: float) -> float:
        """Unscaled ``I_order(z)``; ``inf`` past the float range."""
        e = self.log_value + z
        return self.sign * math.exp(e) if e < 709.78 else math.inf


def _crossover(order: float) -> float:
    return max(15.0, 2.0 * order)


def _log_ive_series(order: float, z: float) -> float:
    # sum_r (z/2)^(2r+order) / (r! Gamma(r+1+order)), normalised by its first term
    log_t0 = order * math.log(0.5 * z) - math.lgamma(order + 1.0)
    q = 0.25 * z * z
    term, total, shift = 1.0, 1.0, 0.0
    r = 0
    while True:
        r += 1
        term *= q / (r * (r + order))
        total += term
        if total > 1e280:
            total *= 1e-280
            term *= 1e-280
            shift += 280.0 * math.log(10.0)
        if term < _EPS * total and r > 0.5 * z:
            break
    return log_t0 + math.log(total) + shift - z


def _log_ive_hankel(order: float, z: float):
    """Hankel expansion; returns ``None`` when it cannot reach double precision."""
    mu = 4.0 * order * order
    term, total = 1.0, 1.0
    k = 0
    best = math.inf
    while True:
        k += 1
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        if nxt == 0.0:
            break
        if abs(nxt) > abs(term) and k > 1:
            return None
        term = nxt
        total += term
        best = abs(term)
        if best < _EPS * abs(total):
            break
        if k > 200:
            return None
    if total <= 0:
        return None
    return math.log(total) - 0.5 * (_LOG_2PI + math.log(z))


def _log_ive_half(order: float, z: float):
    """Closed forms for orders 1/2 and 3/2."""
    if order == 0.5:
        # e^{-z} sinh z = -expm1(-2z) / 2
        return 0.5 * (math.log(2.0 / math.pi) - math.log(z)) + math.log(-0.5 * math.expm1(-2.0 * z))
    if order == 1.5 and z >= 1.0:
        ch = 0.5 * (1.0 + math.exp(-2.0 * z))
        sh = -0.5 * math.expm1(-2.0 * z)
        return 0.5 * (math.log(2.0 / math.pi) - math.log(z)) + math.log(ch - sh / z)
    return None


def log_ive(order: float, z: float) -> float:
    """``log(exp(-z) I_order(z))`` for ``order >= 0``, ``z >= 0``; ``-inf`` where ``I = 0``."""
    if z == 0.0:
        return 0.0 if order == 0.0 else -math.inf
    half = _log_ive_half(order, z)
    if half is not None:
        return half
    if z >= _crossover(order):
        h = _log_ive_hankel(order, z)
        if h is not None:
            return h
    return _log_ive_series(order, z)


def bessel_i(order: float, z: float) -> ScaledBessel:
    """Modified Bessel function of the first kind of real order, in scaled log form.

    Parameters
    ----------
    order : float
        Nonnegative real order.
    z : float
        Nonnegative argument.

    Returns
    -------
    ScaledBessel
        ``exp(log_value + z)`` reproduces ``I_order(z)``.
    """
    order, z = float(order), float(z)
    if not (order >= 0.0 and z >= 0.0) or math.isnan(order + z):
        raise ValueError(f"bessel_i needs order >= 0 and z >= 0, got ({order}, {z})")
    if math.isinf(z):
        return ScaledBessel(-math.inf)
    return ScaledBessel(log_ive(order, z))


def bessel_i_value(order: float, z: float) -> float:
    """Plain ``I_order(z)`` (overflows to ``inf``)."""
    return bessel_i(order, z).value(z)


def reg_lower_inc_gamma(m: float, z: float) -> float:
    """Regularized lower incomplete gamma ``P(m, z)``."""
    m, z = float(m), float(z)
    if not m > 0:
        raise ValueError(f"reg_lower_inc_gamma needs m > 0, got {m}")
    if z < 0 or math.isnan(z):
        raise ValueError(f"reg_lower_inc_gamma needs z >= 0, got {z}")
    if z == 0.0:
        return 0.0
    if math.isinf(z):
        return 1.0
    if z < m + 1.0:
        return _gamma_series(m, z)
    return 1.0 - _gamma_cfrac(m, z)


def reg_upper_inc_gamma(m: float, z: float) -> float:
    """Complement ``Q(m, z) = 1 - P(m, z)`` computed without cancellation."""
    m, z = float(m), float(z)
    if not m > 0:
        raise ValueError(f"reg_upper_inc_gamma needs m > 0, got {m}")
    if z < 0 or math.isnan(z):
        raise ValueError(f"reg_upper_inc_gamma needs z >= 0, got {z}")
    if z == 0.0:
        return 1.0
    if math.isinf(z):
        return 0.0
    if z < m + 1.0:
        return 1.0 - _gamma_series(m, z)
    return _gamma_cfrac(m, z)


def _gamma_prefactor(m: float, z: float) -> float:
    return math.exp(m * math.log(z) - z - math.lgamma(m))


def _gamma_series(m: float, z: float) -> float:
    ap, term = m, 1.0 / m
    total = term
    for _ in range(10_000):
        ap += 1.0
        term *= z / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * _gamma_prefactor(m, z)


def _gamma_cfrac(m: float, z: float) -> float:
    tiny = 1e-300
    b = z + 1.0 - m
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - m)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * _gamma_prefactor(m, z)


def log_gamma(x: float) -> float:
    return math.lgamma(x)


def normal_cdf(z):
    """Standard normal distribution function (scalar or array)."""
    if np.ndim(z) == 0:
        return 0.5 * math.erfc(-float(z) / math.sqrt(2.0))
    return 0.5 * _sp.erfc(-np.asarray(z, dtype=float) / math.sqrt(2.0))


def bessel_jy(order: float, z: float) -> tuple[float, float]:
    """Bessel functions ``(J_order(z), Y_order(z))`` of real order for ``z > 0``.

    Negative orders are passed through; the separable solution needs ``-nu``.
    """
    z = float(z)
    if not z > 0:
        raise ValueError(f"bessel_jy needs z > 0, got {z}")
    return float(_sp.jv(order, z)), float(_sp.yv(order, z))
