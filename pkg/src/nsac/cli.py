"""Command-line interface.

Subcommands: ``run``, ``compare-forms``, ``decay-fit``, ``mms``,
``inequality-lab``, ``resume``.  Exit codes: 0 success, 2 validation,
3 runtime physics failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import InputError, NsacError

__all__ = ["main", "build_parser"]


def _print_json(payload, stream=None):
    from .runner import _clean, _json_default

    json.dump(_clean(payload), stream or sys.stdout, indent=2, default=_json_default)
    (stream or sys.stdout).write("\n")


def _cmd_run(args):
    from .config import load_config
    from .runner import run_experiment

    cfg = load_config(args.config)
    outcome = run_experiment(cfg, args.out)
    summary = {k: outcome.manifest.get(k) for k in ("status", "exit_code", "error", "t_final", "steps", "fits")}
    _print_json(summary)
    return outcome.exit_code


def _cmd_resume(args):
    from .config import load_config
    from .runner import resume_experiment

    cfg = load_config(args.config)
    if args.t_end is not None:
        from dataclasses import replace

        cfg.stepper = replace(cfg.stepper, t_end=args.t_end)
        cfg.raw["stepper"]["t_end"] = args.t_end
    outcome = resume_experiment(cfg, args.checkpoint, args.out)
    summary = {k: outcome.manifest.get(k) for k in ("status", "exit_code", "error", "t_final", "steps")}
    _print_json(summary)
    return outcome.exit_code


def _cmd_compare(args):
    from .config import load_config
    from .runner import compare_forms

    cfg = load_config(args.config)
    report = compare_forms(cfg, args.out)
    report = {k: v for k, v in report.items() if k != "series"}
    _print_json(report)
    if args.tolerance is not None:
        worst = max(report["sup_rho"], report["sup_u"], report["sup_chi"])
        if worst > args.tolerance:
            print(f"sup-difference {worst:.3e} exceeds tolerance {args.tolerance:.3e}", file=sys.stderr)
            return 3
    return 0


def _cmd_decay_fit(args):
    from .runner import refit_csv

    window = tuple(args.window) if args.window else None
    fits = refit_csv(args.csv, args.norm or None, window)
    _print_json([f.to_dict() for f in fits])
    return 0


def _cmd_mms(args):
    from .experiments import builtin_mms, mms_forcing, mms_residual
    from .grid import make_grid
    from .integrators import StepperConfig, run
    from .model import ModelParams

    params = ModelParams()
    ms = builtin_mms(args.case, args.dim)
    grid = make_grid(args.dim, [args.n] * args.dim, [2 * np.pi] * args.dim)
    forcing = mms_forcing(ms, params, grid, args.formulation)
    dts = [args.dt * 2.0**-i for i in range(args.levels)]
    errors = []
    for dt in dts:
        cfg = StepperConfig(dt=dt, t_end=args.t_end, scheme=args.scheme, blowup_ceiling=None)
        res = run(ms.state(grid, 0.0, args.formulation), cfg, params, forcing=forcing)
        exact = ms.state(grid, args.t_end, args.formulation)
        err = max(float(np.max(np.abs(a - b))) for a, b in zip(res.state.fields(), exact.fields()))
        errors.append(err)
    slope = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    report = {
        "case": args.case,
        "dim": args.dim,
        "n": args.n,
        "scheme": args.scheme,
        "formulation": args.formulation,
        "dts": dts,
        "errors": errors,
        "slope": slope,
        "spatial_residual": mms_residual(ms, params, grid, args.t_end, args.formulation),
    }
    _print_json(report)
    return 0


def _parse_value(text):
    if text in ("inf", "+inf"):
        return float("inf")
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _cmd_ineq(args):
    from .grid import make_grid
    from .inequalities import inequality_lab

    exponents = {}
    for item in args.set or []:
        if "=" not in item:
            raise InputError(f"--set expects name=value, got {item!r}")
        key, val = item.split("=", 1)
        exponents[key] = _parse_value(val)
    grid = make_grid(args.dim, [args.n] * args.dim, [2 * np.pi] * args.dim)
    report = inequality_lab(args.inequality, trials=args.trials, seed=args.seed, grid=grid, **exponents)
    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="nsac", description="Compressible NSAC pseudo-spectral simulator and harness")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output.dir)")
    r.set_defaults(func=_cmd_run)

    r = sub.add_parser("resume", help="continue a run from a checkpoint")
    r.add_argument("checkpoint")
    r.add_argument("--config", required=True)
    r.add_argument("--t-end", type=float, default=None)
    r.add_argument("--out")
    r.set_defaults(func=_cmd_resume)

    r = sub.add_parser("compare-forms", help="perturbation vs conservative cross-check")
    r.add_argument("config")
    r.add_argument("--out")
    r.add_argument("--tolerance", type=float, default=None, help="fail (exit 3) above this sup-difference")
    r.set_defaults(func=_cmd_compare)

    r = sub.add_parser("decay-fit", help="re-fit decay exponents from a diagnostics CSV")
    r.add_argument("csv")
    r.add_argument("--norm", action="append", help="column id (repeatable; default: all)")
    r.add_argument("--window", type=float, nargs=2, metavar=("T0", "T1"))
    r.set_defaults(func=_cmd_decay_fit)

    r = sub.add_parser("mms", help="manufactured-solution temporal convergence")
    r.add_argument("--case", default="chi_decay", choices=["chi_decay", "coupled"])
    r.add_argument("--dim", type=int, default=1)
    r.add_argument("--n", type=int, default=16)
    r.add_argument("--scheme", default="euler", choices=["euler", "bdf2"])
    r.add_argument("--formulation", default="perturbation", choices=["perturbation", "conservative"])
    r.add_argument("--dt", type=float, default=0.02)
    r.add_argument("--levels", type=int, default=3)
    r.add_argument("--t-end", type=float, default=1.0)
    r.set_defaults(func=_cmd_mms)

    r = sub.add_parser("inequality-lab", help="measure constants of the functional inequalities")
    r.add_argument("inequality", choices=["GN", "KatoPonce", "Commutator", "HLS", "Composition"])
    r.add_argument("--trials", type=int, default=100)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--dim", type=int, default=3)
    r.add_argument("--n", type=int, default=16)
    r.add_argument("--set", action="append", metavar="NAME=VALUE", help="override an exponent")
    r.add_argument("--out")
    r.set_defaults(func=_cmd_ineq)
    return p


def main(argv=None):
    from .runner import exit_code_for

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NsacError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
