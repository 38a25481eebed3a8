"""Monte Carlo for ``dF = sigma F^alpha dW``.

For ``alpha <= 1`` paths are stepped in ``F`` by Euler-Maruyama and frozen at
zero on the first step that lands at or below it (or reflected, for the
``alpha < 1/2`` boundary experiments).

For ``alpha > 1`` Euler in ``F`` is useless as an oracle: each step is an
exact martingale increment, so it cannot see the mean loss of the strict
local martingale, and the ``F^alpha`` diffusion overflows. Those runs step the
Bessel coordinate ``R = F^(1-alpha) / (sigma (alpha-1))`` instead, which has
dimension ``delta = (2 alpha - 1)/(alpha - 1) > 2`` and never hits zero,
using the drift-implicit update

    R' = (u + sqrt(u^2 + 2 (delta - 1) dt)) / 2,   u = R + dW.

Paths are split into fixed-size blocks, each with its own substream spawned
from the master seed, so results do not depend on the number of threads.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .transforms import DomainError, ModelParams, nu_of_alpha, x_to_y

THREADS_ENV = "CEVLAB_THREADS"
_Z_CAP = 10.0


class MCScheme(enum.Enum):
    EULER_ABSORBED = "EulerAbsorbed"
    EULER_REFLECTED = "EulerReflected"
    BESSEL_IMPLICIT = "BesselImplicit"


@dataclass(frozen=True)
class MCConfig:
    n_paths: int = 100_000
    n_steps: int = 500
    seed: int = 20240611
    scheme: Optional[MCScheme] = None  # None -> EulerAbsorbed for alpha <= 1, BesselImplicit above
    block_size: int = 1 << 16
    threads: Optional[int] = None

    def __post_init__(self):
        if self.n_paths < 10_000:
            raise DomainError("n_paths must be at least 10^4")
        if self.n_steps < 100:
            raise DomainError("n_steps must be at least 100")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")

    def scheme_for(self, alpha: float) -> MCScheme:
        s = self.scheme
        if s is None:
            return MCScheme.BESSEL_IMPLICIT if alpha > 1 else MCScheme.EULER_ABSORBED
        if s is MCScheme.EULER_REFLECTED and not alpha < 0.5:
            raise DomainError("reflection at zero is only admissible for alpha < 1/2")
        if s is MCScheme.BESSEL_IMPLICIT and not alpha > 1:
            raise DomainError("the Bessel-coordinate scheme needs alpha > 1")
        if s is not MCScheme.BESSEL_IMPLICIT and alpha > 1:
            raise DomainError("F-coordinate Euler cannot resolve alpha > 1; use BesselImplicit")
        return s

    def n_threads(self) -> int:
        if self.threads:
            return int(self.threads)
        env = os.environ.get(THREADS_ENV)
        if env:
            return max(int(env), 1)
        return min(os.cpu_count() or 1, 8)


@dataclass
class MCEstimate:
    mean: float
    std_error: float
    absorbed_fraction: float = 0.0
    n_capped: int = 0
    n_paths: int = 0

    def within(self, target: float, n_se: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_se * self.std_error

    def as_record(self) -> dict:
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "absorbed_fraction": self.absorbed_fraction,
            "n_capped": self.n_capped,
            "n_paths": self.n_paths,
        }


def _terminal_block(params: ModelParams, x0: float, T: float, n: int, n_steps: int, scheme: MCScheme, rng):
    """Terminal levels for ``n`` paths; returns ``(F_T, absorbed_mask, n_capped)``."""
    dt = T / n_steps
    sq = math.sqrt(dt)
    a, s = params.alpha, params.sigma
    if scheme is MCScheme.BESSEL_IMPLICIT:
        delta = (2 * a - 1) / (a - 1)
        r = np.full(n, x0 ** (1 - a) / (s * (a - 1)))
        for _ in range(n_steps):
            u = r + sq * rng.standard_normal(n)
            r = 0.5 * (u + np.sqrt(u * u + 2.0 * (delta - 1.0) * dt))
        f = (s * (a - 1) * r) ** (-1.0 / (a - 1))
        return f, np.zeros(n, dtype=bool), 0
    f = np.full(n, float(x0))
    dead = np.zeros(n, dtype=bool)
    capped = 0
    reflect = scheme is MCScheme.EULER_REFLECTED
    for _ in range(n_steps):
        z = rng.standard_normal(n)
        big = np.abs(z) > _Z_CAP
        if big.any():
            capped += int(big.sum())
            np.clip(z, -_Z_CAP, _Z_CAP, out=z)
        f += s * np.power(np.maximum(f, 0.0), a) * sq * z
        if reflect:
            np.abs(f, out=f)
        else:
            hit = f <= 0.0
            dead |= hit
            f[dead] = 0.0
    return f, dead, capped


def _blocks(n_paths: int, block_size: int):
    sizes = [block_size] * (n_paths // block_size)
    if n_paths % block_size:
        sizes.append(n_paths % block_size)
    return sizes


def _run(params: ModelParams, x0: float, cfg: MCConfig, fn: Callable[[np.ndarray], np.ndarray], T: Optional[float] = None):
    if not x0 > 0:
        raise DomainError("x0 must be positive")
    T = params.horizon if T is None else T
    scheme = cfg.scheme_for(params.alpha)
    sizes = _blocks(cfg.n_paths, cfg.block_size)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))

    def work(k):
        rng = np.random.Generator(np.random.PCG64(seeds[k]))
        f, dead, capped = _terminal_block(params, x0, T, sizes[k], cfg.n_steps, scheme, rng)
        v = fn(f)
        return float(np.sum(v)), float(np.sum(v * v)), int(dead.sum()), capped

    threads = cfg.n_threads()
    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(work, range(len(sizes))))
    else:
        parts = [work(k) for k in range(len(sizes))]
    n = cfg.n_paths
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    absorbed = sum(p[2] for p in parts) / n
    return MCEstimate(mean, math.sqrt(var / n), absorbed, sum(p[3] for p in parts), n)


def simulate_terminal(params: ModelParams, x0: float, cfg: Optional[MCConfig] = None) -> MCEstimate:
    """Estimate ``E[F_T]`` with ``F_0 = x0`` and ``T = params.horizon``."""
    return _run(params, x0, cfg or MCConfig(), lambda f: f)


def mc_call_price(params: ModelParams, x0: float, strike: float, cfg: Optional[MCConfig] = None) -> MCEstimate:
    """Estimate ``E[(F_T - K)^+]``; absorbed paths pay nothing."""
    if not strike > 0:
        raise DomainError("strike must be positive")
    return _run(params, x0, cfg or MCConfig(), lambda f: np.maximum(f - strike, 0.0))


def absorption_probability(params: ModelParams, x0: float, cfg: Optional[MCConfig] = None) -> MCEstimate:
    """Fraction of paths absorbed at zero by ``T``; ``mean`` is that fraction.

    Only meaningful for ``alpha < 1``; the closed form is
    ``Q(-nu, y(x0) / 2T)``.
    """
    if not params.alpha < 1:
        raise DomainError("zero is unattainable for alpha >= 1")
    est = _run(params, x0, cfg or MCConfig(), lambda f: (f <= 0.0).astype(float))
    return MCEstimate(est.mean, est.std_error, est.mean, est.n_capped, est.n_paths)


def absorption_closed_form(params: ModelParams, x0: float) -> float:
    from .specfun import reg_upper_inc_gamma

    nu = nu_of_alpha(params.alpha)
    return reg_upper_inc_gamma(-nu, x_to_y(x0, params) / (2.0 * params.horizon))


def step_bias(params: ModelParams, x0: float, cfg: Optional[MCConfig] = None) -> tuple[float, float]:
    """Change in the ``E[F_T]`` estimate when ``dt`` is halved, on coupled paths.

    The coarse path uses the pairwise sums of the fine Brownian increments.
    Returns ``(fine - coarse, std_error of the fine estimate)``.
    """
    cfg = cfg or MCConfig()
    scheme = cfg.scheme_for(params.alpha)
    # all normals of a block are drawn up front, so keep blocks small
    sizes = _blocks(cfg.n_paths, min(cfg.block_size, 4096))
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    T = params.horizon
    diffs, fines, fines2 = [], [], []
    for k, n in enumerate(sizes):
        rng = np.random.Generator(np.random.PCG64(seeds[k]))
        z = rng.standard_normal((2 * cfg.n_steps, n))
        fine = _replay(params, x0, T, z, scheme)
        coarse = _replay(params, x0, T, (z[0::2] + z[1::2]) / math.sqrt(2.0), scheme)
        diffs.append(float(np.sum(fine - coarse)))
        fines.append(float(np.sum(fine)))
        fines2.append(float(np.sum(fine * fine)))
    n = cfg.n_paths
    m = math.fsum(fines) / n
    se = math.sqrt(max(math.fsum(fines2) / n - m * m, 0.0) / (n - 1))
    return math.fsum(diffs) / n, se


class _Replay:
    """Generator stand-in that serves pre-drawn normals row by row."""

    def __init__(self, z):
        self._z = z
        self._k = 0

    def standard_normal(self, n):
        row = self._z[self._k]
        self._k += 1
        return row.copy()


def _replay(params, x0, T, z, scheme):
    f, _, _ = _terminal_block(params, x0, T, z.shape[1], z.shape[0], scheme, _Replay(z))
    return f
