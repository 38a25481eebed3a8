"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``) whose keys match
the long flag names with dashes replaced by underscores; flags given on the
command line win. Records go out as JSON lines, tables as CSV with units in
the header.

Exit codes: 0 ok, 1 verification failure, 2 invalid input, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from contextlib import contextmanager
from typing import Optional

import numpy as np
from scipy.integrate import quad

from . import acceptance, exact, kernel, mc, pricer, transforms
from .fdsolver import BoundaryPolicy, FarPolicy, Grading, GridSpec, Scheme, ZeroPolicy, solve
from .transforms import DomainError, GrowthClass, ModelParams

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_NONCONV = 0, 1, 2, 3

GROWTH_PANEL = [
    GrowthClass.bounded(),
    GrowthClass.sublinear(0.5),
    GrowthClass.linear(),
    GrowthClass.superlinear(2.0),
    GrowthClass.exp_power(0.5),
    GrowthClass.exp_power(2.0),
]


class InputError(Exception):
    pass


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _config(args: argparse.Namespace, defaults: dict) -> dict:
    cfg = dict(defaults)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InputError("config must be a JSON object")
        cfg.update(loaded)
    for key, val in vars(args).items():
        if key in ("config", "command", "func") or val is None:
            continue
        cfg[key] = val
    return cfg


@contextmanager
def _sink(path: Optional[str]):
    if path:
        with open(path, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _emit(records, path=None):
    with _sink(path) as out:
        for r in records:
            out.write(json.dumps(r, allow_nan=True) + "\n")


def _table(header, rows, path=None):
    with _sink(path) as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _notice(msg: str):
    print(f"notice: {msg}", file=sys.stderr)


def _params(cfg) -> ModelParams:
    if cfg.get("alpha") is None:
        raise InputError("alpha is required")
    return ModelParams(float(cfg["alpha"]), float(cfg.get("sigma", 1.0)), float(cfg.get("horizon", 1.0)))


def _payoff(cfg) -> pricer.Payoff:
    kind = str(cfg.get("payoff", "linear")).lower()
    if kind == "call":
        return pricer.Payoff.call(_req(cfg, "strike"))
    if kind == "put":
        return pricer.Payoff.put(_req(cfg, "strike"))
    if kind == "linear":
        return pricer.Payoff.linear()
    if kind in ("constant", "const"):
        return pricer.Payoff.const(float(cfg.get("constant", 1.0)))
    if kind == "tabulated":
        return pricer.Payoff.tabulated(cfg.get("knots", []), float(cfg.get("slope", 0.0)))
    raise InputError(f"unknown payoff {kind!r}")


def _req(cfg, key):
    if cfg.get(key) is None:
        raise InputError(f"{key} is required")
    return float(cfg[key])


# ---------------------------------------------------------------- classify


def cmd_classify(args) -> int:
    cfg = _config(args, {})
    alpha = _req(cfg, "alpha")
    bc = transforms.classify_boundary(alpha)
    recs = [
        {
            "record": "boundary",
            "alpha": alpha,
            "at_zero": bc.at_zero.value,
            "at_infinity": bc.at_infinity.value,
            "feller_c_process": bc.feller_c_process,
        }
    ]
    zero_data = bool(cfg.get("zero_data", False))
    for g in GROWTH_PANEL:
        v = transforms.uniqueness_verdict(alpha, g, zero_data)
        recs.append({"record": "verdict", "alpha": alpha, "growth": str(g), "status": v.status.value, "reason": v.reason.value})
    _emit(recs, cfg.get("output"))
    return EXIT_OK


# ---------------------------------------------------------------- kernel-eval


def cmd_kernel_eval(args) -> int:
    cfg = _config(args, {})
    t = _req(cfg, "t")
    if cfg.get("eta") is not None or cfg.get("x") is not None:
        p = _params(cfg)
        x, eta = _req(cfg, "x"), _req(cfg, "eta")
        k = kernel.eval_x(t, x, eta, p)
        acc = kernel.mass(t, transforms.x_to_y(x, p), p.alpha)
        rec = {"coords": "x", "t": t, "x": x, "eta": eta, "alpha": p.alpha, "sigma": p.sigma}
    else:
        alpha = _req(cfg, "alpha")
        y, xi = _req(cfg, "y"), _req(cfg, "xi")
        k = kernel.eval_y(t, y, xi, alpha)
        acc = kernel.mass(t, xi, alpha)
        rec = {"coords": "y", "t": t, "y": y, "xi": xi, "alpha": alpha}
    rec.update(
        value=k.value,
        log_value=k.log_value,
        underflowed=k.underflowed,
        continuous_mass=acc.continuous_mass,
        singular_weight=acc.singular_weight,
    )
    _emit([rec], cfg.get("output"))
    return EXIT_OK


# ---------------------------------------------------------------- price


def _lognormal_price(payoff: pricer.Payoff, sigma: float, t: float, x: float) -> pricer.PriceResult:
    if payoff.kind is pricer.PayoffKind.CALL:
        return pricer.PriceResult(exact.bs_price(x, payoff.strike, sigma, t), 0.0)
    if payoff.kind is pricer.PayoffKind.PUT:
        c = exact.bs_price(x, payoff.strike, sigma, t)
        return pricer.PriceResult(c - x + payoff.strike, 0.0)
    sq = sigma * math.sqrt(t)

    def f(z):
        return float(payoff(x * math.exp(sq * z - 0.5 * sq * sq))) * math.exp(-0.5 * z * z)

    pts = [(math.log(k / x) + 0.5 * sq * sq) / sq for k in payoff.kinks if k > 0]
    pts = [p for p in pts if -12 < p < 12] or None
    val, err = quad(f, -12.0 + 0.5 * sq, 12.0 + 0.5 * sq, points=pts, limit=500, epsabs=1e-13, epsrel=1e-11)
    norm = 1.0 / math.sqrt(2.0 * math.pi)
    return pricer.PriceResult(val * norm, err * norm)


def cmd_price(args) -> int:
    cfg = _config(args, {"t": 1.0})
    p = _params(cfg)
    payoff = _payoff(cfg)
    t, x = _req(cfg, "t"), _req(cfg, "x")
    if p.alpha == 1.0:
        _notice("alpha = 1 is the lognormal case; priced with the Black-Scholes formula")
        if not (t > 0 and x > 0):
            raise DomainError("price needs t > 0 and x > 0")
        res = _lognormal_price(payoff, p.sigma, t, x)
        method = "black_scholes"
    else:
        qc = pricer.QuadratureConfig(
            rel_tol=float(cfg.get("rel_tol", 1e-8)),
            abs_tol=float(cfg.get("abs_tol", 1e-12)),
            max_subdivisions=int(cfg.get("max_subdivisions", 2000)),
            truncation_radii=tuple(cfg["truncation_radii"]) if cfg.get("truncation_radii") else None,
        )
        res = pricer.price_convolution(p, payoff, t, x, qc)
        method = "convolution"
    rec = {"alpha": p.alpha, "sigma": p.sigma, "t": t, "x": x, "payoff": payoff.kind.value, "method": method}
    rec.update(res.as_record())
    _emit([rec], cfg.get("output"))
    if not res.converged:
        _notice("partial integrals over (0, M) have not settled; value is provisional")
        return EXIT_NONCONV
    return EXIT_OK


# ---------------------------------------------------------------- exact-eval


def cmd_exact_eval(args) -> int:
    cfg = _config(args, {"t": 1.0, "sigma": 1.0})
    kind = str(cfg.get("kind", "stationary")).lower().replace("_", "-")
    xs = _floats(cfg.get("x", [1.0]))
    t = _req(cfg, "t")
    recs = []
    for x in xs:
        if kind == "stationary":
            v = exact.stationary(float(cfg.get("c1", 0.0)), float(cfg.get("c2", 1.0)), x)
        elif kind == "feller-power":
            v = exact.feller_power(t, x, _params(cfg))
        elif kind == "bounded-alpha2":
            v = exact.bounded_alpha2(t, x, float(cfg["sigma"]))
        elif kind == "black-scholes":
            v = exact.bs_price(x, _req(cfg, "strike"), float(cfg["sigma"]), t)
        elif kind == "separable":
            p = _params(cfg)
            fp = transforms.feller_params(p.alpha)
            y = transforms.x_to_y(x, p)
            v = exact.separable(t, y, fp, _req(cfg, "k"), float(cfg.get("c1", 1.0)), float(cfg.get("c2", 0.0)))
        else:
            raise InputError(f"unknown exact solution {kind!r}")
        recs.append({"kind": kind, "t": t, "x": x, "value": float(v)})
    _emit(recs, cfg.get("output"))
    return EXIT_OK


# ---------------------------------------------------------------- fd-solve


def _policy(name: str, cfg, p: ModelParams) -> BoundaryPolicy:
    zero = ZeroPolicy.DIRICHLET if str(cfg.get("zero", "degenerate")).lower() == "dirichlet" else ZeroPolicy.DEGENERATE
    zv = float(cfg.get("zero_value", 0.0))
    name = name.lower().replace("_", "-")
    if name == "payoff":
        return BoundaryPolicy(zero, FarPolicy.DIRICHLET_PAYOFF, zv)
    if name == "second-derivative-zero":
        return BoundaryPolicy(zero, FarPolicy.SECOND_DERIVATIVE_ZERO, zv)
    if name == "bounded-alpha2":
        if p.alpha != 2.0:
            raise InputError("far policy bounded-alpha2 needs alpha = 2")
        return BoundaryPolicy(zero, FarPolicy.DIRICHLET_EXACT, zv, _ub_far(p.sigma), "U_b")
    raise InputError(f"unknown far policy {name!r}")


def _ub_far(sigma):
    return lambda t, x: exact.bounded_alpha2(t, x, sigma) if t > 0 else x


def _grid(cfg) -> GridSpec:
    grading = Grading.SINH if str(cfg.get("grading", "sinh")).lower() == "sinh" else Grading.UNIFORM
    return GridSpec(
        float(cfg.get("x_max", 8.0)),
        int(cfg.get("n_points", 400)),
        grading,
        float(cfg.get("concentration", 5.0)),
        float(cfg.get("center", 1.0)),
    )


def cmd_fd_solve(args) -> int:
    cfg = _config(args, {"t": 1.0, "n_steps": 200, "far": "payoff", "scheme": "crank-nicolson"})
    p = _params(cfg)
    payoff = _payoff(cfg)
    scheme = Scheme.IMPLICIT_EULER if str(cfg["scheme"]).lower() in ("implicit-euler", "implicit") else Scheme.CRANK_NICOLSON
    surf = solve(p, payoff, _grid(cfg), _req(cfg, "t"), int(cfg["n_steps"]), scheme, _policy(cfg["far"], cfg, p))
    for w in surf.warnings:
        _notice(w)
    _notice(surf.policy.describe())
    if cfg.get("all_times"):
        rows = [(f"{tt:.10g}", f"{xx:.10g}", f"{v:.12g}") for i, tt in enumerate(surf.times) for xx, v in zip(surf.nodes, surf.values[i])]
        _table(["t [years to expiry]", "x [price]", "U [price]"], rows, cfg.get("output"))
    else:
        rows = [(f"{xx:.10g}", f"{v:.12g}") for xx, v in zip(surf.nodes, surf.values[-1])]
        _table(["x [price]", f"U(t={surf.times[-1]:g}) [price]"], rows, cfg.get("output"))
    return EXIT_OK


# ---------------------------------------------------------------- mc


def _mc_config(cfg) -> mc.MCConfig:
    return mc.MCConfig(
        n_paths=int(cfg.get("paths", 100_000)),
        n_steps=int(cfg.get("steps", 500)),
        seed=int(cfg.get("seed", 20240611)),
        threads=int(cfg["threads"]) if cfg.get("threads") else None,
    )


def cmd_mc(args) -> int:
    cfg = _config(args, {"x0": 1.0})
    p = _params(cfg)
    mcc = _mc_config(cfg)
    x0 = float(cfg["x0"])
    if cfg.get("absorption"):
        est = mc.absorption_probability(p, x0, mcc)
        target, quantity = mc.absorption_closed_form(p, x0), "absorbed_fraction"
    elif cfg.get("strike") is not None:
        est = mc.mc_call_price(p, x0, float(cfg["strike"]), mcc)
        target, quantity = None, "call_price"
    else:
        est = mc.simulate_terminal(p, x0, mcc)
        target, quantity = None, "terminal_mean"
    rec = {
        "quantity": quantity,
        "alpha": p.alpha,
        "sigma": p.sigma,
        "horizon": p.horizon,
        "x0": x0,
        "seed": mcc.seed,
        "n_steps": mcc.n_steps,
        "scheme": mcc.scheme_for(p.alpha).value,
    }
    rec.update(est.as_record())
    if target is not None:
        rec["closed_form"] = target
    _emit([rec], cfg.get("output"))
    return EXIT_OK


# ---------------------------------------------------------------- demo-nonuniqueness


def cmd_demo_nonuniqueness(args) -> int:
    cfg = _config(
        args,
        {"sigma": 1.0, "t": [1.0], "x": [0.5, 1.0, 2.0], "x_max": 32.0, "n_points": 400, "n_steps": 200, "paths": 100_000, "steps": 500},
    )
    p = _params(cfg)
    if p.alpha <= 1.0:
        raise InputError(
            f"alpha = {p.alpha:g}: the price process is a true martingale and linear-growth data give a unique solution; nothing to demonstrate"
        )
    note = "missing far-field condition" if p.alpha > 1.5 else "outside uniqueness class"
    ts, xs = _floats(cfg["t"]), _floats(cfg["x"])
    lin = pricer.Payoff.linear()
    far_b = _far_convolution(p)
    rows = []
    for t in ts:
        grid = GridSpec(float(cfg["x_max"]), int(cfg["n_points"]), Grading.SINH, 5.0, min(float(np.median(xs)), float(cfg["x_max"]) / 2))
        bc_b = BoundaryPolicy(at_far=FarPolicy.DIRICHLET_EXACT, exact=far_b, label="convolution")
        sa = solve(p, lin, grid, t, int(cfg["n_steps"]), bc=BoundaryPolicy())
        sb = solve(p, lin, grid, t, int(cfg["n_steps"]), bc=bc_b)
        tp = ModelParams(p.alpha, p.sigma, t)
        for x in xs:
            conv = pricer.price_convolution(p, lin, t, x).value
            est = mc.simulate_terminal(tp, x, _mc_config(cfg))
            rows.append(
                [t, x, x, conv, float(sa.at(x)), float(sb.at(x)), est.mean, est.std_error, x - conv, note]
            )
    header = [
        "t [years]",
        "x [price]",
        "stationary U=x [price]",
        "convolution [price]",
        "fd far=payoff [price]",
        "fd far=convolution [price]",
        "mc mean [price]",
        "mc std_error [price]",
        "gap x-convolution [price]",
        "annotation",
    ]
    fmt = [[f"{v:.8g}" if isinstance(v, float) else v for v in r] for r in rows]
    _table(header, fmt, cfg.get("output"))
    return EXIT_OK


def _far_convolution(p: ModelParams):
    if p.alpha == 2.0:
        return _ub_far(p.sigma)
    cache = {}

    def far(t, x):
        if t <= 0:
            return x
        key = (t, x)
        if key not in cache:
            cache[key] = pricer.price_convolution(p, pricer.Payoff.linear(), t, x).value
        return cache[key]

    return far


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    if not acceptance.select(args.filter):
        raise InputError(f"no criteria match filter {args.filter!r}")
    ok = acceptance.run_all(args.filter, args.tolerance_scale, lambda s: print(s, flush=True))
    return EXIT_OK if ok else EXIT_VERIFY


# ---------------------------------------------------------------- parser


def _common(sp, model=True):
    sp.add_argument("--config", help="JSON file with keys matching the long flag names")
    sp.add_argument("--output", help="write to this file instead of stdout")
    if model:
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--sigma", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cevlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("classify", help="boundary classification and uniqueness verdicts")
    _common(sp)
    sp.add_argument("--zero-data", action="store_const", const=True, help="boundary data at x=0 are supplied")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("kernel-eval", help="fundamental solution in y or x coordinates")
    _common(sp)
    for k in ("t", "y", "xi", "x", "eta"):
        sp.add_argument(f"--{k}", type=float)
    sp.set_defaults(func=cmd_kernel_eval)

    sp = sub.add_parser("price", help="convolution price of a payoff")
    _common(sp)
    sp.add_argument("--t", type=float, help="time to expiry [years]")
    sp.add_argument("--x", type=float, help="current level")
    _payoff_args(sp)
    sp.add_argument("--rel-tol", type=float)
    sp.add_argument("--abs-tol", type=float)
    sp.add_argument("--max-subdivisions", type=int)
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("exact-eval", help="closed-form solutions")
    _common(sp)
    sp.add_argument("--kind", choices=["stationary", "feller-power", "bounded-alpha2", "black-scholes", "separable"])
    sp.add_argument("--t", type=float)
    sp.add_argument("--x", help="comma-separated levels")
    for k in ("c1", "c2", "strike", "k"):
        sp.add_argument(f"--{k}", type=float)
    sp.set_defaults(func=cmd_exact_eval)

    sp = sub.add_parser("fd-solve", help="finite-difference solution; CSV of the final slice")
    _common(sp)
    sp.add_argument("--t", type=float)
    _payoff_args(sp)
    sp.add_argument("--x-max", type=float)
    sp.add_argument("--n-points", type=int)
    sp.add_argument("--n-steps", type=int)
    sp.add_argument("--grading", choices=["sinh", "uniform"])
    sp.add_argument("--center", type=float)
    sp.add_argument("--concentration", type=float)
    sp.add_argument("--scheme", choices=["crank-nicolson", "implicit-euler"])
    sp.add_argument("--far", choices=["payoff", "second-derivative-zero", "bounded-alpha2"])
    sp.add_argument("--zero", choices=["degenerate", "dirichlet"])
    sp.add_argument("--zero-value", type=float)
    sp.add_argument("--all-times", action="store_const", const=True)
    sp.set_defaults(func=cmd_fd_solve)

    sp = sub.add_parser("mc", help="Monte Carlo estimates")
    _common(sp)
    sp.add_argument("--horizon", type=float)
    sp.add_argument("--x0", type=float)
    sp.add_argument("--strike", type=float)
    sp.add_argument("--absorption", action="store_const", const=True)
    _mc_args(sp)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("demo-nonuniqueness", help="compare solutions that share the same data")
    _common(sp)
    sp.add_argument("--t", help="comma-separated times")
    sp.add_argument("--x", help="comma-separated levels")
    sp.add_argument("--x-max", type=float)
    sp.add_argument("--n-points", type=int)
    sp.add_argument("--n-steps", type=int)
    _mc_args(sp)
    sp.set_defaults(func=cmd_demo_nonuniqueness)

    sp = sub.add_parser("verify", help="run the acceptance criteria")
    sp.add_argument("--filter", help="tag (kernel, pricer, mc, fdsolver, exact, transforms, specfun) or number")
    sp.add_argument("--tolerance-scale", type=float, default=1.0, help="multiply every tolerance")
    sp.set_defaults(func=cmd_verify)
    return ap


def _payoff_args(sp):
    sp.add_argument("--payoff", choices=["call", "put", "linear", "constant", "tabulated"])
    sp.add_argument("--strike", type=float)
    sp.add_argument("--constant", type=float)


def _mc_args(sp):
    sp.add_argument("--paths", type=int)
    sp.add_argument("--steps", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int, help=f"worker threads (default: ${mc.THREADS_ENV} or CPU count)")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with np.errstate(all="ignore"):
            return args.func(args)
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
