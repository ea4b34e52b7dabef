"""Experiment configuration: a versioned YAML document.

Example (every key except ``schema_version`` and ``grid`` is optional)::

    schema_version: 1
    grid: {dim: 3, sizes: 32, lengths: 6.283185307179586}
    model: {mu: 1.0, lam: 0.0, gamma: 2.0, ell: 1.0, pressure_scale: null}
    formulation: perturbation          # or conservative
    physics: full                      # or linear (nonlinear terms disabled)
    stepper: {scheme: euler, dt: 0.01, t_end: 1.0, cfl_guard: 0.5, blowup_ceiling: 1.0}
    initial: {kind: powerlaw, seed: 7, s: 0.5, k_cut: 2.0, amplitude: 1.0e-3}
    diagnostics:
      norms: ["L2:u", "Hneg0.5:u"]
      energies: [{l: 0, m: 3, eta: 0.5}]
      physical_energy: false
      cadence: 10
    output: {dir: out, checkpoint_times: [0.5]}
    fits: [{norm: "L2:u", window: [5, 100]}]

Scalars given for ``sizes``/``lengths`` are repeated over all axes.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import yaml

from .diagnostics import DiagnosticsPlan
from .errors import InputError, ParseError, ValidationError
from .grid import Grid
from .integrators import StepperConfig
from .model import CONSERVATIVE, PERTURBATION, ModelParams

__all__ = ["SCHEMA_VERSION", "ExperimentConfig", "InitialRecipe", "FitSpec", "parse_config", "load_config"]

SCHEMA_VERSION = 1

_TOP = {"schema_version", "grid", "model", "formulation", "physics", "stepper", "initial", "diagnostics", "output", "fits"}
_MODEL = {"mu", "lam", "gamma", "ell", "pressure_scale", "vacuum_floor", "smallness_delta"}
_STEPPER = {"scheme", "dt", "t_end", "cfl_guard", "blowup_ceiling"}
_DIAG = {"norms", "energies", "physical_energy", "cadence", "chi_ref"}
_OUTPUT = {"dir", "checkpoint_times"}
_STOCHASTIC = {"powerlaw", "random"}
_RECIPES = {
    "equilibrium": {"chi": 0.0},
    "powerlaw": {
        "s": 0.5,
        "k_cut": None,
        "amplitude": 1e-3,
        "fields": ["rho", "u", "chi"],
        "chi_background": 0.0,
        "dealias_safe": True,
        "sqrt_energy": None,
    },
    "random": {"band": None, "amplitude": 1e-3, "fields": ["rho", "u", "chi"], "chi_background": 0.0},
    "bump": {"amplitude": 1e-3, "width": 1.0, "chi_background": 1.0, "rho_amplitude": 0.0},
}


@dataclass(frozen=True)
class InitialRecipe:
    kind: str
    seed: int | None
    options: dict


@dataclass(frozen=True)
class FitSpec:
    norm: str
    window: tuple | None = None


@dataclass
class ExperimentConfig:
    grid: Grid
    params: ModelParams
    formulation: str
    physics: str
    stepper: StepperConfig
    initial: InitialRecipe
    plan: DiagnosticsPlan
    output_dir: str
    checkpoint_times: tuple
    fits: tuple
    raw: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def chi_ref(self):
        return self.plan.chi_ref

    def to_dict(self):
        """Config with all defaults materialized (the manifest echo)."""
        return copy.deepcopy(self.raw)


def _section(doc, key, allowed):
    sec = doc.get(key, {}) or {}
    if not isinstance(sec, dict):
        raise ParseError(f"'{key}' must be a mapping")
    unknown = set(sec) - allowed
    if unknown:
        raise ValidationError(f"{key}: unknown keys {sorted(unknown)}")
    return dict(sec)


def _per_axis(value, dim, name):
    if isinstance(value, (list, tuple)):
        if len(value) != dim:
            raise ValidationError(f"grid.{name}: need {dim} entries, got {len(value)}")
        return list(value)
    return [value] * dim


def _wrap(section, fn):
    try:
        return fn()
    except (ValidationError, ParseError):
        raise
    except InputError as exc:
        raise ValidationError(f"{section}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{section}: {exc}") from exc


def parse_config(text):
    """Parse and validate a YAML config, materializing every default."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed config: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("config must be a mapping")
    if "schema_version" not in doc:
        raise ParseError("config lacks schema_version")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ParseError(f"unknown schema_version {doc['schema_version']!r} (supported: {SCHEMA_VERSION})")
    unknown = set(doc) - _TOP
    if unknown:
        raise ValidationError(f"unknown top-level keys {sorted(unknown)}")
    if "grid" not in doc:
        raise ValidationError("grid: required")

    g = _section(doc, "grid", {"dim", "sizes", "lengths"})
    if "dim" not in g or "sizes" not in g:
        raise ValidationError("grid: needs dim and sizes")
    dim = g["dim"]
    if dim not in (1, 2, 3):
        raise ValidationError(f"grid.dim must be 1, 2 or 3, got {dim!r}")
    sizes = [int(n) for n in _per_axis(g["sizes"], dim, "sizes")]
    lengths = [float(x) for x in _per_axis(g.get("lengths", 2 * math.pi), dim, "lengths")]
    grid = _wrap("grid", lambda: Grid(dim, sizes, lengths))

    formulation = doc.get("formulation", PERTURBATION)
    if formulation not in (PERTURBATION, CONSERVATIVE):
        raise ValidationError(f"formulation must be {PERTURBATION} or {CONSERVATIVE}, got {formulation!r}")
    physics = doc.get("physics", "full")
    if physics not in ("full", "linear"):
        raise ValidationError(f"physics must be full or linear, got {physics!r}")

    m = _section(doc, "model", _MODEL)
    params = _wrap("model", lambda: ModelParams(**{k: (float(v) if v is not None else None) for k, v in m.items()}))

    st = _section(doc, "stepper", _STEPPER)
    st.setdefault("scheme", "euler")
    st.setdefault("dt", 0.01)
    st.setdefault("t_end", 1.0)
    dg = _section(doc, "diagnostics", _DIAG)
    cadence = int(dg.get("cadence", 1))

    def _stepper():
        return StepperConfig(
            dt=float(st["dt"]),
            t_end=float(st["t_end"]),
            scheme=st["scheme"],
            cfl_guard=float(st.get("cfl_guard", 0.5)),
            cadence=cadence,
            blowup_ceiling=None if st.get("blowup_ceiling", 1.0) is None else float(st.get("blowup_ceiling", 1.0)),
        )

    stepper = _wrap("stepper", _stepper)

    ini = doc.get("initial", {"kind": "equilibrium"}) or {"kind": "equilibrium"}
    if not isinstance(ini, dict):
        raise ParseError("'initial' must be a mapping")
    ini = dict(ini)
    kind = ini.pop("kind", "equilibrium")
    if kind not in _RECIPES:
        raise ValidationError(f"initial.kind must be one of {sorted(_RECIPES)}, got {kind!r}")
    seed = ini.pop("seed", None)
    if kind in _STOCHASTIC and seed is None:
        raise ValidationError(f"initial.seed is required for the stochastic recipe {kind!r}")
    unknown = set(ini) - set(_RECIPES[kind])
    if unknown:
        raise ValidationError(f"initial: unknown keys {sorted(unknown)} for kind {kind!r}")
    options = {**copy.deepcopy(_RECIPES[kind]), **ini}
    for fname in options.get("fields", []):
        if fname not in ("rho", "u", "chi"):
            raise ValidationError(f"initial.fields: unknown field {fname!r}")
    recipe = InitialRecipe(kind, None if seed is None else int(seed), options)

    if "chi_ref" in dg:
        chi_ref = float(dg["chi_ref"])
    else:
        chi_ref = float(options.get("chi_background", options.get("chi", 0.0)))
    plan = _wrap(
        "diagnostics",
        lambda: DiagnosticsPlan(
            norms=tuple(dg.get("norms", ())),
            energies=tuple(dg.get("energies", ())),
            physical_energy=bool(dg.get("physical_energy", False)),
            chi_ref=chi_ref,
            cadence=cadence,
        ),
    )

    out = _section(doc, "output", _OUTPUT)
    out.setdefault("dir", "nsac_out")
    times = tuple(float(t) for t in out.get("checkpoint_times", []) or [])
    for t in times:
        if not 0 <= t <= stepper.t_end:
            raise ValidationError(f"output.checkpoint_times: {t} lies outside [0, t_end]")

    fits_raw = doc.get("fits", []) or []
    if not isinstance(fits_raw, list):
        raise ParseError("'fits' must be a list")
    fits = []
    columns = plan.columns()
    for f in fits_raw:
        if not isinstance(f, dict) or "norm" not in f:
            raise ValidationError("fits: each entry needs a norm id")
        if f["norm"] not in columns:
            raise ValidationError(f"fits: {f['norm']!r} is not a recorded column {columns}")
        window = f.get("window")
        if window is not None:
            if len(window) != 2 or not float(window[1]) > float(window[0]):
                raise ValidationError(f"fits: window must be [t0, t1] with t1 > t0, got {window}")
            window = (float(window[0]), float(window[1]))
        fits.append(FitSpec(f["norm"], window))

    raw = {
        "schema_version": SCHEMA_VERSION,
        "grid": {"dim": dim, "sizes": sizes, "lengths": lengths},
        "model": {k: getattr(params, k) for k in sorted(_MODEL)},
        "formulation": formulation,
        "physics": physics,
        "stepper": {
            "scheme": stepper.scheme,
            "dt": stepper.dt,
            "t_end": stepper.t_end,
            "cfl_guard": stepper.cfl_guard,
            "blowup_ceiling": stepper.blowup_ceiling,
        },
        "initial": {"kind": kind, "seed": recipe.seed, **options},
        "diagnostics": {
            "norms": [n.id for n in plan.norms],
            "energies": [{"l": e.l, "m": e.m, "eta": e.eta} for e in plan.energies],
            "physical_energy": plan.physical_energy,
            "cadence": cadence,
            "chi_ref": chi_ref,
        },
        "output": {"dir": out["dir"], "checkpoint_times": list(times)},
        "fits": [{"norm": f.norm, "window": None if f.window is None else list(f.window)} for f in fits],
    }
    return ExperimentConfig(
        grid, params, formulation, physics, stepper, recipe, plan, str(out["dir"]), times, tuple(fits), raw
    )


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(config):
    return yaml.safe_dump(config.to_dict(), sort_keys=False)
