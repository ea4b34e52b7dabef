"""Experiment orchestration: initial data, runs, artifacts, cross-form checks."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from . import checkpoint as ckpt
from .diagnostics import DecayFit, default_window, fit_decay, record
from .errors import DegenerateSeries, FormatError, InputError, NsacError, PhysicsError, ValidationError
from .experiments import gen_powerlaw_field
from .grid import random_field
from .integrators import Stepper, run
from .model import CONSERVATIVE, PERTURBATION, State, sqrt_energy

__all__ = [
    "build_initial",
    "run_experiment",
    "resume_experiment",
    "compare_forms",
    "refit_csv",
    "read_csv",
    "RunOutcome",
    "exit_code_for",
    "CSV_NAME",
    "MANIFEST_NAME",
]

CSV_NAME = "diagnostics.csv"
MANIFEST_NAME = "manifest.json"
COMPARE_NAME = "compare_forms.json"


def exit_code_for(exc):
    """Process exit status for an exception: 2 input, 3 physics, 4 I/O."""
    if exc is None:
        return 0
    if isinstance(exc, PhysicsError):
        return 3
    if isinstance(exc, (FormatError, OSError)):
        return 4
    if isinstance(exc, InputError):
        return 2
    return 1


def failure_class(exc):
    if exc is None:
        return None
    if isinstance(exc, OSError) and not isinstance(exc, NsacError):
        return "Io"
    return type(exc).__name__


# -- initial data ---------------------------------------------------------------


def _bump_shape(grid, width):
    x = grid.coords()
    expo = sum((np.cos(2 * np.pi * xi / length) - 1.0) for xi, length in zip(x, grid.lengths))
    return np.broadcast_to(np.exp(expo / width**2), grid.shape).copy()


def build_initial(config):
    """Perturbation-form initial state for ``config.initial`` (converted if needed)."""
    grid = config.grid
    rec = config.initial
    opt = rec.options
    d = grid.dim
    rho = np.zeros(grid.shape)
    u = np.zeros((d,) + grid.shape)
    chi = np.zeros(grid.shape)
    if rec.kind == "equilibrium":
        chi[...] = float(opt["chi"])
    elif rec.kind in ("powerlaw", "random"):
        seeds = np.random.SeedSequence(rec.seed).spawn(d + 2)
        fields = set(opt["fields"])
        amp = float(opt["amplitude"])

        def draw(ss):
            if rec.kind == "powerlaw":
                k_cut = opt["k_cut"]
                if k_cut is None:
                    k_cut = grid.dealias_kmax if opt["dealias_safe"] else grid.nyquist_kmax
                return gen_powerlaw_field(grid, float(opt["s"]), float(k_cut), ss, amp, bool(opt["dealias_safe"]))
            f = random_field(grid, np.random.default_rng(ss), band=opt["band"])
            peak = float(np.max(np.abs(f)))
            return f * (amp / peak) if peak > 0 else f

        if "rho" in fields:
            rho = draw(seeds[0])
        if "u" in fields:
            u = np.stack([draw(seeds[1 + i]) for i in range(d)])
        if "chi" in fields:
            chi = draw(seeds[d + 1])
        target = opt.get("sqrt_energy")
        if target is not None:
            probe = State(grid, rho, u, chi)
            size = sqrt_energy(probe)
            if size <= 0:
                raise ValidationError("initial.sqrt_energy: cannot rescale a zero field")
            scale = float(target) / size
            rho, u, chi = rho * scale, u * scale, chi * scale
        chi = chi + float(opt["chi_background"])
    elif rec.kind == "bump":
        shape = _bump_shape(grid, float(opt["width"]))
        chi = float(opt["chi_background"]) + float(opt["amplitude"]) * shape
        rho = float(opt["rho_amplitude"]) * (shape - shape.mean())
    state = State(grid, rho, u, chi)
    return state.to_conservative() if config.formulation == CONSERVATIVE else state


# -- artifacts ----------------------------------------------------------------------


def _fmt(x):
    return format(float(x), ".17g")


def write_csv(path, columns, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(["t", *columns]) + "\n")
        for r in records:
            fh.write(",".join(_fmt(v) for v in r.row(columns)) + "\n")


def read_csv(path):
    """``(columns, {column: np.ndarray})`` of a diagnostics CSV (``t`` included)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty CSV") from None
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return header, {name: data[:, i] for i, name in enumerate(header)}


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _clean(obj):
    """Replace non-finite floats so the manifest stays strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path, payload):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(_clean(payload), fh, indent=2, sort_keys=False, default=_json_default)
        fh.write("\n")
    os.replace(tmp, path)


def _fits(config, records):
    out = []
    if not records:
        return out
    t = np.array([r.t for r in records])
    for spec in config.fits:
        window = spec.window or default_window(config.grid)
        try:
            fit = fit_decay(t, [r[spec.norm] for r in records], window, norm=spec.norm)
            out.append(fit.to_dict())
        except DegenerateSeries as exc:
            out.append({"norm": spec.norm, "window": list(window), "error": str(exc)})
    return out


def _invariants(records, drift):
    summary = {"mean_rho_drift": drift}
    if not records:
        return summary
    first = records[0]
    summary["min_density"] = min(r.min_rho for r in records)
    summary["max_density"] = max(r.max_rho for r in records)
    e0 = first["sqrtE3"]
    summary["sqrtE3_max_ratio"] = max(r["sqrtE3"] for r in records) / e0 if e0 > 0 else 0.0
    for col in first.values:
        if col.startswith("E") and "@" in col or col == "F":
            vals = np.array([r[col] for r in records])
            base = abs(vals[0]) if vals[0] != 0 else 1.0
            inc = np.diff(vals) / base if vals.size > 1 else np.zeros(0)
            summary[f"{col}_max_relative_increase"] = float(inc.max()) if inc.size else 0.0
    return summary


@dataclass
class RunOutcome:
    exit_code: int
    status: str
    manifest: dict
    records: list = field(default_factory=list)
    state: State | None = None
    error: Exception | None = None


def _execute(config, outdir, initial, previous=None, params=None, label="run"):
    """Run from ``initial`` writing CSV, manifest and checkpoints into ``outdir``."""
    start = time.perf_counter()
    params = params or config.params
    out = Path(outdir or config.output_dir)
    records, state, error = [], initial, None
    drift = 0.0
    manifest = {
        "command": label,
        "version": __version__,
        "backend": _kernels.BACKEND,
        "config": config.to_dict(),
        "outputs": {"csv": CSV_NAME, "checkpoints": []},
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        dt = config.stepper.dt
        base = initial.t - initial.step * dt
        ckpt_steps = {int(round((t - base) / dt)) for t in config.checkpoint_times}
        mean0 = float(np.mean(initial.density()))
        scheme2 = config.stepper.scheme == "bdf2"

        def on_step(s, prev):
            nonlocal drift
            drift = max(drift, abs(float(np.mean(s.density())) - mean0))
            if s.step in ckpt_steps:
                name = f"checkpoint_{s.step:08d}.nsac"
                ckpt.save(s, out / name, params, previous=prev if scheme2 else None)
                manifest["outputs"]["checkpoints"].append({"file": name, "t": s.t, "step": s.step})

        if initial.step in ckpt_steps and previous is None:
            on_step(initial, None)

        def recorder(s):
            return record(s, config.plan, params)

        try:
            result = run(
                initial,
                config.stepper,
                params,
                recorder=recorder,
                chi_ref=config.chi_ref,
                previous=previous,
                on_step=on_step,
                linear=config.physics == "linear",
            )
            records, state = result.records, result.state
        except PhysicsError as exc:
            error = exc
            partial = getattr(exc, "result", None)
            if partial is not None:
                records, state = partial.records, partial.state
        write_csv(out / CSV_NAME, config.plan.columns(), records)
    except Exception as exc:  # noqa: BLE001 - recorded in the manifest, re-raised below if unexpected
        if error is None:
            error = exc
    status = "ok" if error is None else failure_class(error)
    code = exit_code_for(error)
    manifest.update(
        {
            "status": status,
            "exit_code": code,
            "error": None if error is None else str(error),
            "wall_time_s": time.perf_counter() - start,
            "t_final": None if state is None else state.t,
            "steps": None if state is None else state.step,
            "records": len(records),
            "fits": _fits(config, records),
            "invariants": _invariants(records, drift),
        }
    )
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / MANIFEST_NAME, manifest)
    except OSError as exc:
        if error is None:
            error, code, status = exc, 4, "Io"
    if code == 1:
        raise error
    return RunOutcome(code, status, manifest, records, state, error)


def run_experiment(config, outdir=None):
    """Run ``config`` end to end; the manifest is written even on failure."""
    try:
        initial = build_initial(config)
    except InputError as exc:
        return _failed(config, outdir, exc)
    return _execute(config, outdir, initial, label="run")


def _failed(config, outdir, exc, label="run"):
    manifest = {
        "command": label,
        "version": __version__,
        "config": config.to_dict(),
        "status": failure_class(exc),
        "exit_code": exit_code_for(exc),
        "error": str(exc),
    }
    out = Path(outdir or config.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / MANIFEST_NAME, manifest)
    except OSError:
        pass
    return RunOutcome(exit_code_for(exc), failure_class(exc), manifest, error=exc)


def resume_experiment(config, checkpoint_path, outdir=None):
    """Continue from a checkpoint to ``config.stepper.t_end``.

    Grid, formulation and model parameters come from the checkpoint; the
    stepper, diagnostics and outputs from ``config``.  With the same ``dt``
    the continuation is bit-identical to an uninterrupted run.
    """
    try:
        loaded = ckpt.load(checkpoint_path)
    except (FormatError, OSError) as exc:
        return _failed(config, outdir, exc, label="resume")
    state = loaded.state
    if state.grid != config.grid or state.formulation != config.formulation:
        exc = ValidationError("checkpoint grid/formulation differ from the config")
        return _failed(config, outdir, exc, label="resume")
    if config.stepper.scheme == "bdf2" and loaded.previous is None and state.step > 0:
        exc = ValidationError("BDF2 resume needs a checkpoint holding the previous level")
        return _failed(config, outdir, exc, label="resume")
    return _execute(config, outdir, state, loaded.previous, loaded.params, label="resume")


# -- cross-form oracle ---------------------------------------------------------------


def compare_forms(config, outdir=None, small_data_limit=0.05):
    """Run both formulations in lockstep and report sup-norm differences.

    Differences are taken at every cadence point: ``rho_cons - (1 + varrho)``,
    ``m / rho - u`` and ``rho chi / rho - chi`` in ``L^inf``.
    """
    pert0 = build_initial(config)
    if pert0.formulation != PERTURBATION:
        pert0 = pert0.to_perturbation()
    size = sqrt_energy(pert0, chi_ref=config.chi_ref)
    if size > small_data_limit:
        raise ValidationError(f"compare-forms needs small data: sqrt(E_0^3) = {size:.4g} > {small_data_limit}")
    cons0 = pert0.to_conservative()
    params, stepper_cfg = config.params, config.stepper
    linear = config.physics == "linear"
    sp = Stepper(config.grid, params, stepper_cfg, PERTURBATION, chi_ref=config.chi_ref, linear=linear)
    sc = Stepper(config.grid, params, stepper_cfg, CONSERVATIVE, chi_ref=config.chi_ref, linear=linear)
    sup = {"rho": 0.0, "u": 0.0, "chi": 0.0}
    series = []

    def compare(a, b):
        varrho, u, chi = b.primitive()
        diffs = {
            "rho": float(np.max(np.abs(b.rho - (1.0 + a.rho)))),
            "u": float(np.max(np.abs(u - a.u))),
            "chi": float(np.max(np.abs(chi - a.chi))),
        }
        for k, v in diffs.items():
            sup[k] = max(sup[k], v)
        series.append({"t": a.t, **diffs})

    a, b = pert0, cons0
    compare(a, b)
    last = stepper_cfg.nsteps
    while a.step < last:
        a = sp.advance(a)
        b = sc.advance(b)
        if a.step % stepper_cfg.cadence == 0 or a.step == last:
            compare(a, b)
    report = {
        "sup_rho": sup["rho"],
        "sup_u": sup["u"],
        "sup_chi": sup["chi"],
        "checkpoints": len(series),
        "dt": stepper_cfg.dt,
        "t_end": stepper_cfg.t_end,
        "initial_sqrtE3": size,
        "pressure_scale": params.pressure_scale,
        "gamma": params.gamma,
        "series": series,
    }
    if outdir is not None:
        Path(outdir).mkdir(parents=True, exist_ok=True)
        write_json(Path(outdir) / COMPARE_NAME, report)
    return report


# -- offline fits ----------------------------------------------------------------------


def refit_csv(path, norms=None, window=None):
    """Re-fit decay exponents for columns of an existing diagnostics CSV."""
    header, data = read_csv(path)
    cols = [c for c in header if c not in ("t", "min_rho", "max_rho")] if not norms else list(norms)
    fits = []
    for col in cols:
        if col not in data:
            raise InputError(f"column {col!r} not in {path}")
        fits.append(fit_decay(data["t"], data[col], window, norm=col))
    return fits


__all__ += ["DecayFit", "write_csv", "write_json"]
