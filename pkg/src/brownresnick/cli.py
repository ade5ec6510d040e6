"""Command-line front end.

Subcommands:
  simulate   write one or more realizations of a generator as CSV
  study      run the method-comparison study (CSV + JSON outputs)
  bounds     evaluate the error budget of a method and print it
  lambda     estimate the lattice intensity constant (with JSON cache)
  check      run the margin checks on a stored sample file

Exit codes: 0 success, 2 configuration or domain error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import bounds as bounds_mod
from .errors import BrownResnickError
from .gauss import Grid, VariogramModel
from .methods import FRECHET, GUMBEL, MethodConfig, simulate
from .rng import RandomStream
from .shape import cached_lambda, estimate_lambda_p, store_lambda
from .stats import dev_summary, ks_two_sample_critical, max_stability_check
from .study import StudyConfig, run_study

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def default_method_config(method: int) -> MethodConfig:
    """Pilot-tuned per-method budgets for b = 2, p = 0.1 scale studies."""
    if method == 0:
        return MethodConfig(method=0, k_max=4000)
    if method == 1:
        return MethodConfig(method=1, shifts=(-1.0, 1.0), k_max=4000)
    if method == 2:
        return MethodConfig(method=2, v=2.0, k_max=8000)
    if method == 3:
        return MethodConfig(method=3, j_max=150, k_max=400)
    return MethodConfig(method=4, v=14.0, k_max=4000, shape_mode="pooled")


def _parse_shifts(text: str) -> tuple:
    return tuple(float(s) for s in text.split(",") if s.strip())


def _method_config_from_args(args) -> MethodConfig:
    base = default_method_config(args.method)
    overrides: dict = {}
    if args.k is not None:
        overrides["k_max"] = args.k
    if args.fixed:
        overrides["adaptive"] = False
    if args.margins is not None:
        overrides["margins"] = args.margins
    if args.shifts is not None:
        overrides["shifts"] = _parse_shifts(args.shifts)
    if args.v is not None:
        overrides["v"] = args.v
    if args.j_max is not None:
        overrides["j_max"] = args.j_max
    if args.lambda_p is not None:
        overrides["lambda_p"] = args.lambda_p
    if args.shape_mode is not None:
        overrides["shape_mode"] = args.shape_mode
    return dataclasses.replace(base, **overrides)


def _cmd_simulate(args) -> int:
    model = VariogramModel(alpha=args.alpha, scale=args.scale)
    grid = Grid(half_width=args.b, step=args.step)
    config = _method_config_from_args(args)
    if config.method == 4 and args.shape_mode is None:
        # no point building a shape pool for a handful of realizations
        config = dataclasses.replace(config, shape_mode="fresh")
    stream = RandomStream(args.seed)
    rows = []
    for rep in range(args.reps):
        real = simulate(model, grid, config, stream, rep=rep)
        for t, z in zip(grid.points, real.values):
            rows.append((rep, t, z))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        if args.reps == 1:
            fh.write("t,value\n")
            for _, t, z in rows:
                fh.write(f"{float(t)!r},{float(z)!r}\n")
        else:
            fh.write("rep,t,value\n")
            for rep, t, z in rows:
                fh.write(f"{rep},{float(t)!r},{float(z)!r}\n")
    print(f"wrote {args.out} ({args.reps} replication(s), {grid.size} grid points)")
    return EXIT_OK


def _study_config_from_args(args) -> StudyConfig:
    payload: dict = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    methods = payload.get("methods")
    if methods is not None:
        methods = tuple(MethodConfig(**m) for m in methods)
    else:
        methods = tuple(default_method_config(m) for m in range(5))
    if args.method is not None:
        methods = (dataclasses.replace(default_method_config(args.method)),)
    kwargs = {
        "methods": methods,
        "alphas": tuple(payload.get("alphas", (0.1, 0.5, 1.0, 1.5, 1.9))),
        "scale": payload.get("scale", 0.5),
        "b": payload.get("b", 2.0),
        "step": payload.get("step", 0.1),
        "reps": payload.get("reps", 2000),
        "seed": payload.get("seed", 1),
        "out": payload.get("out", "study_out"),
        "margins": payload.get("margins", GUMBEL),
        "workers": payload.get("workers", 1),
        "lambda_cache": payload.get("lambda_cache"),
        "no_cache": payload.get("no_cache", False),
    }
    if args.alpha is not None:
        kwargs["alphas"] = (args.alpha,)
    if args.scale is not None:
        kwargs["scale"] = args.scale
    if args.b is not None:
        kwargs["b"] = args.b
    if args.step is not None:
        kwargs["step"] = args.step
    if args.reps is not None:
        kwargs["reps"] = args.reps
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if args.out is not None:
        kwargs["out"] = args.out
    if args.margins is not None:
        kwargs["margins"] = args.margins
    if args.workers is not None:
        kwargs["workers"] = args.workers
    if args.lambda_cache is not None:
        kwargs["lambda_cache"] = args.lambda_cache
    if args.no_cache:
        kwargs["no_cache"] = True
    return StudyConfig(**kwargs)


def _cmd_study(args) -> int:
    config = _study_config_from_args(args)
    result = run_study(config)
    for row in result.rows:
        print(
            f"method {row.method}  alpha {row.alpha:<4}  dev(a)={row.dev.dev_a:.4f}  "
            f"dev(0)={row.dev.dev_0:.4f}  dev(b)={row.dev.dev_b:.4f}  DEV={row.dev.dev:.4f}  "
            f"paths={row.mean_paths:.1f}  {row.mean_runtime_s * 1e3:.2f} ms/rep"
        )
    print(f"wrote {config.out}/study.csv and {config.out}/study.json")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    kwargs = dict(b=args.b, k=args.k, c=args.c, sharp=args.sharp)
    if args.x is not None:
        kwargs["x"] = args.x
    if args.shifts is not None:
        kwargs["shifts"] = _parse_shifts(args.shifts)
    if args.v is not None:
        kwargs["v"] = args.v
    if args.step is not None:
        kwargs["p"] = args.step
    if args.j_max is not None:
        kwargs["j_max"] = args.j_max
    if args.lambda_p is not None:
        kwargs["lambda_p"] = args.lambda_p
    budget = bounds_mod.method_error_bound(args.method, **kwargs)
    print(f"{'component':<14}{'value':>14}")
    for name, value in (
        ("conditional", budget.conditional),
        ("low_event", budget.low_event),
        ("high_event", budget.high_event),
        ("total", budget.total),
        ("total_clamped", budget.total_clamped),
    ):
        print(f"{name:<14}{value:>14.6e}")
    print(json.dumps(budget.as_dict(), sort_keys=True))
    return EXIT_OK


def _cmd_lambda(args) -> int:
    model = VariogramModel(alpha=args.alpha, scale=args.scale)
    est = None
    if args.cache and not args.no_cache:
        est = cached_lambda(args.cache, model, args.step, args.w)
        source = "cache"
    if est is None:
        gen = RandomStream(args.seed).substream(4, 0, 0, 0, 4)
        est = estimate_lambda_p(model, args.step, args.w, args.n, gen)
        source = "estimated"
        if args.cache:
            store_lambda(args.cache, model, args.step, args.w, est)
    payload = est.as_dict()
    payload["source"] = source
    payload["lambda_p_times_p"] = est.lambda_p * args.step
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def _cmd_check(args) -> int:
    data = np.genfromtxt(args.input, delimiter=",", names=True)
    names = data.dtype.names
    if names is None or "t" not in names or "value" not in names:
        raise BrownResnickError("sample file needs a header with t and value columns")
    t = np.round(np.asarray(data["t"], dtype=float), 12)
    values = np.asarray(data["value"], dtype=float)
    b = args.b if args.b is not None else float(np.max(np.abs(t)))
    picks = {}
    for loc, label in ((-b, "a"), (0.0, "0"), (b, "b")):
        mask = np.abs(t - loc) <= 1e-9 * max(1.0, abs(loc))
        if not mask.any():
            raise BrownResnickError(f"no samples at t = {loc}")
        picks[label] = values[mask]
    summary = dev_summary(picks["a"], picks["0"], picks["b"])
    ok = True
    for label, value, limit in (
        ("dev(a)", summary.dev_a, args.dev_max),
        ("dev(0)", summary.dev_0, args.dev0_max),
        ("dev(b)", summary.dev_b, args.dev_max),
        ("DEV", summary.dev, args.dev_max),
    ):
        status = "PASS" if value <= limit else "FAIL"
        ok &= value <= limit
        print(f"[{status}] {label} = {value:.4f} (limit {limit})")
    if args.block > 1:
        sample = picks["0"]
        usable = (sample.size // args.block) * args.block
        stat = max_stability_check(sample[:usable], args.block)
        crit = ks_two_sample_critical(usable // args.block, usable, alpha=0.01)
        status = "PASS" if stat < crit else "FAIL"
        ok &= stat < crit
        print(f"[{status}] max-stability block {args.block}: KS {stat:.4f} < {crit:.4f}")
    return EXIT_OK if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="brsim", description="Brown-Resnick process simulation toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write realizations of one generator")
    sim.add_argument("--method", type=int, default=0, choices=range(5))
    sim.add_argument("--alpha", type=float, default=1.0)
    sim.add_argument("--scale", type=float, default=0.5)
    sim.add_argument("--b", type=float, default=2.0)
    sim.add_argument("--step", type=float, default=0.1)
    sim.add_argument("--k", type=int, default=None, help="path budget k_max")
    sim.add_argument("--fixed", action="store_true", help="disable adaptive stopping")
    sim.add_argument("--reps", type=int, default=1)
    sim.add_argument("--seed", type=int, default=1)
    sim.add_argument("--out", default="realization.csv")
    sim.add_argument("--margins", choices=(GUMBEL, FRECHET), default=None)
    sim.add_argument("--shifts", default=None, help="comma-separated shifts (method 1)")
    sim.add_argument("--v", type=float, default=None, help="half-width (methods 2/4)")
    sim.add_argument("--j-max", dest="j_max", type=int, default=None)
    sim.add_argument("--lambda-p", dest="lambda_p", type=float, default=None)
    sim.add_argument("--shape-mode", dest="shape_mode", choices=("fresh", "pooled"), default=None)
    sim.set_defaults(func=_cmd_simulate)

    study = sub.add_parser("study", help="run the method-comparison study")
    study.add_argument("--config", default=None, help="JSON study configuration")
    study.add_argument("--method", type=int, default=None, choices=range(5))
    study.add_argument("--alpha", type=float, default=None)
    study.add_argument("--scale", type=float, default=None)
    study.add_argument("--b", type=float, default=None)
    study.add_argument("--step", type=float, default=None)
    study.add_argument("--reps", type=int, default=None)
    study.add_argument("--seed", type=int, default=None)
    study.add_argument("--out", default=None)
    study.add_argument("--margins", choices=(GUMBEL, FRECHET), default=None)
    study.add_argument("--workers", type=int, default=None)
    study.add_argument("--lambda-cache", dest="lambda_cache", default=None)
    study.add_argument("--no-cache", dest="no_cache", action="store_true")
    study.set_defaults(func=_cmd_study)

    bnd = sub.add_parser("bounds", help="evaluate a method error budget")
    bnd.add_argument("--method", type=int, required=True, choices=range(5))
    bnd.add_argument("--b", type=float, required=True)
    bnd.add_argument("--k", type=int, required=True)
    bnd.add_argument("--c", type=float, required=True)
    bnd.add_argument("--x", type=float, default=None)
    bnd.add_argument("--shifts", default=None)
    bnd.add_argument("--v", type=float, default=None)
    bnd.add_argument("--step", type=float, default=None, help="lattice step p")
    bnd.add_argument("--j-max", dest="j_max", type=int, default=None)
    bnd.add_argument("--lambda-p", dest="lambda_p", type=float, default=None)
    bnd.add_argument("--sharp", action="store_true")
    bnd.set_defaults(func=_cmd_bounds)

    lam = sub.add_parser("lambda", help="estimate the lattice intensity constant")
    lam.add_argument("--alpha", type=float, default=1.0)
    lam.add_argument("--scale", type=float, default=0.5)
    lam.add_argument("--step", type=float, default=0.1, help="lattice step p")
    lam.add_argument("--w", type=float, default=22.0, help="window half-width")
    lam.add_argument("--n", type=int, default=100_000)
    lam.add_argument("--seed", type=int, default=1)
    lam.add_argument("--cache", default=None, help="JSON cache path")
    lam.add_argument("--no-cache", dest="no_cache", action="store_true")
    lam.set_defaults(func=_cmd_lambda)

    chk = sub.add_parser("check", help="margin checks on a stored sample file")
    chk.add_argument("--input", required=True, help="CSV with t,value columns")
    chk.add_argument("--b", type=float, default=None)
    chk.add_argument("--dev0-max", dest="dev0_max", type=float, default=0.05)
    chk.add_argument("--dev-max", dest="dev_max", type=float, default=0.10)
    chk.add_argument("--block", type=int, default=1, help="max-stability block size")
    chk.set_defaults(func=_cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrownResnickError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (json.JSONDecodeError, ValueError, TypeError) as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"IoError: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
