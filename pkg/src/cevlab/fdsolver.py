"""Finite differences for ``U_t = 0.5 sigma^2 x^(2 alpha) U_xx`` on ``[0, x_max]``.

Centered second differences on a (possibly graded) grid, theta-scheme in time,
one tridiagonal solve per step. The node at ``x = 0`` has a vanishing
diffusion coefficient, so its row is the identity and ``U(t, 0) = Phi(0)``
unless a Dirichlet value is imposed. The far boundary is always a modelling
choice; which choice is *forced* depends on ``alpha`` (see
:func:`cevlab.transforms.classify_boundary`).
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .pricer import Payoff
from .transforms import DomainError, ModelParams

log = logging.getLogger(__name__)


class Grading(enum.Enum):
    UNIFORM = "Uniform"
    SINH = "SinhGraded"


@dataclass(frozen=True)
class GridSpec:
    """Nodes on ``[0, x_max]``; ``SINH`` clusters them around ``center``."""

    x_max: float
    n_points: int = 256
    grading: Grading = Grading.UNIFORM
    concentration: float = 5.0
    center: float = 1.0

    def __post_init__(self):
        if not self.x_max > 0:
            raise DomainError("x_max must be positive")
        if self.n_points < 64:
            raise DomainError("n_points must be at least 64")
        if self.grading is Grading.SINH and not (self.concentration > 0 and 0 < self.center < self.x_max):
            raise DomainError("sinh grading needs concentration > 0 and 0 < center < x_max")

    def nodes(self) -> np.ndarray:
        n = self.n_points
        u = np.linspace(0.0, 1.0, n)
        if self.grading is Grading.UNIFORM:
            return u * self.x_max
        b, c, xm = self.concentration, self.center, self.x_max
        # x(u) = c (1 + sinh(b (u - uc)) / sinh(b uc)), x(0) = 0, x(1) = x_max
        uc = brentq(lambda v: math.sinh(b * (1 - v)) / math.sinh(b * v) - (xm - c) / c, 1e-9, 1 - 1e-9)
        x = c * (1.0 + np.sinh(b * (u - uc)) / math.sinh(b * uc))
        x[0], x[-1] = 0.0, xm
        return x


class ZeroPolicy(enum.Enum):
    DEGENERATE = "Degenerate"
    DIRICHLET = "Dirichlet"


class FarPolicy(enum.Enum):
    DIRICHLET_PAYOFF = "DirichletPayoff"
    DIRICHLET_EXACT = "DirichletExact"
    SECOND_DERIVATIVE_ZERO = "SecondDerivativeZero"


@dataclass(frozen=True)
class BoundaryPolicy:
    at_zero: ZeroPolicy = ZeroPolicy.DEGENERATE
    at_far: FarPolicy = FarPolicy.DIRICHLET_PAYOFF
    zero_value: float = 0.0
    # (t, x) -> U for DirichletExact
    exact: Optional[Callable] = field(default=None, compare=False)
    label: str = ""

    def __post_init__(self):
        if self.at_far is FarPolicy.DIRICHLET_EXACT and self.exact is None:
            raise DomainError("DirichletExact needs an exact solution callable")

    def describe(self) -> str:
        far = self.at_far.value + (f"({self.label})" if self.label else "")
        zero = self.at_zero.value + (f"({self.zero_value:g})" if self.at_zero is ZeroPolicy.DIRICHLET else "")
        return f"zero={zero}; far={far}"


class Scheme(enum.Enum):
    IMPLICIT_EULER = "ImplicitEuler"
    CRANK_NICOLSON = "CrankNicolson"


@dataclass
class SolutionSurface:
    times: np.ndarray
    nodes: np.ndarray
    values: np.ndarray  # (len(times), len(nodes))
    policy: BoundaryPolicy
    grid: Optional[GridSpec] = None
    warnings: list = field(default_factory=list)

    def at(self, x, time_index: int = -1):
        """Linear interpolation of one time slice."""
        return np.interp(x, self.nodes, self.values[time_index])


def _operator(x: np.ndarray, params: ModelParams):
    """Sub/main/super diagonals of the discrete ``0.5 sigma^2 x^2a d2/dx2`` on interior nodes."""
    h = np.diff(x)
    hl, hr = h[:-1], h[1:]
    coef = 0.5 * params.sigma**2 * x[1:-1] ** (2.0 * params.alpha)
    lo = coef * 2.0 / (hl * (hl + hr))
    up = coef * 2.0 / (hr * (hl + hr))
    return lo, -(lo + up), up


def _march(
    x: np.ndarray,
    u0: np.ndarray,
    params: ModelParams,
    t_start: float,
    dts: Sequence[float],
    scheme_thetas: Sequence[float],
    policy: BoundaryPolicy,
    far_payoff_value: float,
    record: Sequence[bool],
) -> list:
    """Advance ``u0`` through the given steps; returns the recorded slices."""
    n = len(x)
    lo, di, up = _operator(x, params)
    h = np.diff(x)
    ratio = h[-1] / h[-2]
    u = u0.astype(float).copy()
    zero_val = u0[0] if policy.at_zero is ZeroPolicy.DEGENERATE else policy.zero_value
    u[0] = zero_val
    out = []
    t = t_start
    ab = np.zeros((3, n))
    for dt, theta, keep in zip(dts, scheme_thetas, record):
        t_new = t + dt
        rhs = u.copy()
        if theta < 1.0:
            # difference form: exactly zero on constants
            lu = lo * (u[:-2] - u[1:-1]) + up * (u[2:] - u[1:-1])
            rhs[1:-1] = u[1:-1] + (1.0 - theta) * dt * lu
        # interior rows of (I - theta dt L)
        ab[:] = 0.0
        ab[0, 2:] = -theta * dt * up
        ab[1, 1:-1] = 1.0 - theta * dt * di
        ab[2, :-2] = -theta * dt * lo
        ab[1, 0] = 1.0
        rhs[0] = zero_val
        if policy.at_far is FarPolicy.SECOND_DERIVATIVE_ZERO:
            # U_N = (1+r) U_{N-1} - r U_{N-2} zeroes the second difference at
            # N-1, so U_t = 0 there: that row is the identity. Solve the
            # reduced system, then extrapolate.
            ab[2, n - 3] = 0.0
            ab[1, n - 2] = 1.0
            rhs[n - 2] = u[n - 2]
            core = solve_banded((1, 1), ab[:, : n - 1].copy(), rhs[: n - 1])
            u = np.empty(n)
            u[:-1] = core
            u[-1] = (1.0 + ratio) * core[-1] - ratio * core[-2]
        else:
            ab[1, n - 1] = 1.0
            if policy.at_far is FarPolicy.DIRICHLET_PAYOFF:
                rhs[-1] = far_payoff_value
            else:
                rhs[-1] = float(policy.exact(t_new, x[-1]))
            u = solve_banded((1, 1), ab, rhs)
        t = t_new
        if keep:
            out.append(u.copy())
    return out


def _steps(total: float, n_steps: int, scheme: Scheme, smooth: bool, rannacher: int):
    dt = total / n_steps
    dts, thetas, rec = [], [], []
    for k in range(n_steps):
        if scheme is Scheme.CRANK_NICOLSON and not smooth and k < rannacher:
            dts += [dt / 2, dt / 2]
            thetas += [1.0, 1.0]
            rec += [False, True]
        else:
            dts.append(dt)
            thetas.append(1.0 if scheme is Scheme.IMPLICIT_EULER else 0.5)
            rec.append(True)
    return dts, thetas, rec


def solve(
    params: ModelParams,
    payoff: Payoff,
    grid: GridSpec,
    t_end: float,
    n_steps: int,
    scheme: Scheme = Scheme.CRANK_NICOLSON,
    bc: Optional[BoundaryPolicy] = None,
    rannacher: int = 2,
) -> SolutionSurface:
    """March the payoff forward to ``t_end`` (time to expiry).

    Non-smooth payoffs under Crank-Nicolson get ``rannacher`` initial steps
    replaced by pairs of implicit half steps.
    """
    bc = bc or BoundaryPolicy()
    if n_steps < 1 or not t_end > 0:
        raise DomainError("need n_steps >= 1 and t_end > 0")
    warnings = []
    if params.alpha < 0.5 and bc.at_zero is ZeroPolicy.DEGENERATE:
        msg = "alpha < 1/2: the problem needs a condition at x = 0; the degenerate row supplies Phi(0)"
        warnings.append(msg)
        log.warning(msg)
    x = grid.nodes()
    u0 = np.asarray(payoff(x), dtype=float)
    dts, thetas, rec = _steps(t_end, n_steps, scheme, payoff.smooth, rannacher)
    slices = _march(x, u0, params, 0.0, dts, thetas, bc, float(payoff(grid.x_max)), rec)
    values = np.vstack([u0[None, :]] + [s[None, :] for s in slices])
    if bc.at_zero is ZeroPolicy.DIRICHLET:
        values[0, 0] = u0[0]
    times = np.linspace(0.0, t_end, n_steps + 1)
    return SolutionSurface(times, x, values, bc, grid, warnings)


@dataclass
class ConvergenceStudy:
    hs: list
    errors: list
    order: float

    @property
    def machine_exact(self) -> bool:
        return max(self.errors) < 1e-10


def residual_order(
    exact_fn: Callable,
    params: ModelParams,
    refinements: Sequence[int] = (64, 128, 256, 512),
    x_max: float = 4.0,
    t0: float = 0.5,
    t1: float = 1.0,
    window: tuple = (0.25, 2.0),
    scheme: Scheme = Scheme.CRANK_NICOLSON,
    steps_per_node: float = 0.5,
) -> ConvergenceStudy:
    """Observed order of the discrete solution against ``exact_fn(t, x)``.

    Starts from the exact profile at ``t0`` on uniform grids, refines ``h`` and
    ``dt`` together, and fits the slope of ``log(error)`` against ``log(h)``.
    A non-monotone error sequence yields ``order = nan``.
    """
    bc = BoundaryPolicy(ZeroPolicy.DEGENERATE, FarPolicy.DIRICHLET_EXACT, exact=exact_fn)
    hs, errs = [], []
    for n in refinements:
        x = GridSpec(x_max, n).nodes()
        u0 = np.asarray(exact_fn(t0, x), dtype=float)
        n_steps = max(int(round(steps_per_node * n)), 1)
        dts, thetas, rec = _steps(t1 - t0, n_steps, scheme, True, 0)
        u = _march(x, u0, params, t0, dts, thetas, bc, 0.0, [False] * (len(dts) - 1) + [True])[-1]
        mask = (x >= window[0]) & (x <= window[1])
        errs.append(float(np.max(np.abs(u[mask] - exact_fn(t1, x[mask])))))
        hs.append(x_max / (n - 1))
    order = float("nan")
    if all(b < a for a, b in zip(errs, errs[1:])) and min(errs) > 0:
        order = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return ConvergenceStudy(hs, errs, order)


@dataclass
class GapRow:
    x_max: float
    sup_gap: float
    probe_gap: float


def nonuniqueness_gap(
    params: ModelParams,
    t: float,
    bc_a: BoundaryPolicy,
    bc_b: BoundaryPolicy,
    x_max_sequence: Sequence[float],
    payoff: Optional[Payoff] = None,
    window: tuple = (0.5, 2.0),
    probe: float = 1.0,
    n_points: int = 400,
    n_steps: int = 200,
    scheme: Scheme = Scheme.CRANK_NICOLSON,
) -> list:
    """Difference between two far-field policies on a fixed interior window.

    Returns one row per ``x_max`` with the sup of ``|U_a - U_b|`` over the
    window and the difference at ``probe``.
    """
    payoff = payoff or Payoff.linear()
    xs = np.linspace(window[0], window[1], 61)
    rows = []
    for xm in x_max_sequence:
        grid = GridSpec(xm, n_points, Grading.SINH, concentration=5.0, center=probe)
        sa = solve(params, payoff, grid, t, n_steps, scheme, bc_a)
        if bc_b == bc_a and bc_b.exact is bc_a.exact:
            rows.append(GapRow(float(xm), 0.0, 0.0))
            continue
        sb = solve(params, payoff, grid, t, n_steps, scheme, bc_b)
        d = sa.at(xs) - sb.at(xs)
        rows.append(GapRow(float(xm), float(np.max(np.abs(d))), float(abs(sa.at(probe) - sb.at(probe)))))
    return rows
