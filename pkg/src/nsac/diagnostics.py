"""Diagnostics records and decay-exponent fits.

A :class:`DiagnosticsPlan` lists the quantities evaluated at every cadence
point.  Column ids are stable strings used as CSV headers:

* ``sqrtE3`` -- ``sqrt(E_0^3)`` of Eq. (2-1), always present;
* one column per :class:`~nsac.norms.NormSpec` (``"L2:u"``, ``"Hneg0.5:rho"``...);
* ``mean:<target>`` beside negative-norm columns: ``Lambda^{-s}`` is taken of
  the fluctuation, so the (not conserved) mean is reported separately;
* ``E<l>_<m>@<eta>`` for each Lyapunov functional and ``F`` for the physical
  energy when requested;
* ``min_rho``, ``max_rho`` -- extrema of the density ``1 + varrho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSeries, InputError, InvalidRange, NonFiniteData
from .model import _energy_functional_spec, _sqrt_energy_spec, physical_energy
from .norms import NormSpec, lp_norm

__all__ = ["EnergySpec", "DiagnosticsPlan", "DiagnosticsRecord", "record", "DecayFit", "fit_decay", "default_window"]


@dataclass(frozen=True)
class EnergySpec:
    """Lyapunov functional ``E_l^m`` with cross-term weight ``eta``."""

    l: int = 0
    m: int = 3
    eta: float = 0.5

    def __post_init__(self):
        if not (0 <= self.l <= self.m) or int(self.l) != self.l or int(self.m) != self.m:
            raise InvalidRange(f"need integers 0 <= l <= m, got l={self.l}, m={self.m}")
        if not 0 <= self.eta < 1:
            raise InvalidRange(f"eta must lie in [0, 1), got {self.eta}")

    @property
    def id(self):
        return f"E{self.l}_{self.m}@{self.eta:g}"


@dataclass(frozen=True)
class DiagnosticsPlan:
    norms: tuple = ()
    energies: tuple = ()
    physical_energy: bool = False
    chi_ref: float = 0.0
    cadence: int = 1

    def __post_init__(self):
        norms = tuple(n if isinstance(n, NormSpec) else NormSpec.parse(n) for n in self.norms)
        energies = tuple(e if isinstance(e, EnergySpec) else EnergySpec(**e) for e in self.energies)
        object.__setattr__(self, "norms", norms)
        object.__setattr__(self, "energies", energies)
        if self.cadence < 1:
            raise InputError(f"cadence must be >= 1, got {self.cadence}")

    def columns(self):
        cols = ["sqrtE3"]
        means = []
        for n in self.norms:
            cols.append(n.id)
            if n.kind == "HomHs" and n.param > 0 and n.target != "gradchi":
                tag = f"mean:{n.target}"
                if tag not in means:
                    means.append(tag)
        cols += means
        cols += [e.id for e in self.energies]
        if self.physical_energy:
            cols.append("F")
        return cols + ["min_rho", "max_rho"]


@dataclass
class DiagnosticsRecord:
    t: float
    values: dict = field(default_factory=dict)
    min_rho: float = 1.0
    max_rho: float = 1.0
    step: int = 0

    def row(self, columns):
        out = [self.t]
        for c in columns:
            if c == "min_rho":
                out.append(self.min_rho)
            elif c == "max_rho":
                out.append(self.max_rho)
            else:
                out.append(self.values[c])
        return out

    def __getitem__(self, key):
        if key == "min_rho":
            return self.min_rho
        if key == "max_rho":
            return self.max_rho
        return self.values[key]


def _target_spec(grid, target, c_rho, c_u, c_chi):
    if target == "rho":
        return c_rho
    if target == "u":
        return c_u
    if target == "chi":
        return c_chi
    return np.stack([1j * k * c_chi for k in grid.kd])


def _zero(grid):
    return (...,) + (0,) * grid.dim


def _evaluate(grid, spec, c, means):
    kind, p = spec.kind, spec.param
    if kind == "L2":
        return math.sqrt(grid.l2sq(c))
    if kind == "Lp":
        return lp_norm(grid, grid.inv(c), p)
    if kind == "Hk":
        weight = sum(grid.k2**l for l in range(int(p) + 1))
        return math.sqrt(grid.l2sq(c * np.sqrt(weight)))
    if kind == "GradL2":
        return math.sqrt(grid.l2sq(c * grid.lambda_multiplier(p)))
    # HomHs: Lambda^{-s} of the fluctuation; the mean goes to its own column
    if p == 0:
        return math.sqrt(grid.l2sq(c))
    zero = c[_zero(grid)]
    if spec.target != "gradchi":
        means[f"mean:{spec.target}"] = float(np.sqrt(np.sum(np.abs(zero) ** 2)))
    fluct = c.copy()
    fluct[_zero(grid)] = 0.0
    return math.sqrt(grid.l2sq(fluct * grid.lambda_multiplier(-p)))


def record(state, plan, params=None):
    """Evaluate ``plan`` on ``state``; a pure read of the state."""
    grid = state.grid
    varrho, u, chi = state.primitive()
    c_rho, c_u = grid.fwd(varrho), grid.fwd(u)
    c_chi = grid.fwd(chi)
    c_chi[_zero(grid)] -= plan.chi_ref
    values = {"sqrtE3": _sqrt_energy_spec(grid, c_rho, c_u, c_chi, 3)}
    means = {}
    for spec in plan.norms:
        values[spec.id] = _evaluate(grid, spec, _target_spec(grid, spec.target, c_rho, c_u, c_chi), means)
    values.update(sorted(means.items(), key=lambda kv: plan.columns().index(kv[0])))
    for e in plan.energies:
        values[e.id] = _energy_functional_spec(grid, c_rho, c_u, c_chi, int(e.l), int(e.m), e.eta)
    if plan.physical_energy:
        if params is None:
            raise InputError("the physical energy needs model parameters")
        values["F"] = physical_energy(state, params)
    dens = 1.0 + varrho
    rec = DiagnosticsRecord(
        float(state.t),
        {c: values[c] for c in plan.columns() if c in values},
        float(np.min(dens)),
        float(np.max(dens)),
        state.step,
    )
    for key, val in rec.values.items():
        if not math.isfinite(val):
            raise NonFiniteData(f"diagnostic {key} is not finite at t={state.t}")
    return rec


# -- decay fits --------------------------------------------------------------------


def default_window(grid, t0=5.0, t1=100.0, diffusivity=1.0):
    """``[t0, min(t1, 0.1 / (nu k_min^2))]``: the pre-wraparound transient."""
    return t0, min(t1, 0.1 / (diffusivity * grid.k_min**2))


@dataclass
class DecayFit:
    """Least-squares slope of ``log value`` against ``log(1 + t)``."""

    norm: str
    t0: float
    t1: float
    exponent: float
    stderr: float
    r2: float
    samples: int

    def to_dict(self):
        return {
            "norm": self.norm,
            "window": [self.t0, self.t1],
            "exponent": self.exponent,
            "stderr": self.stderr,
            "r2": self.r2,
            "samples": self.samples,
        }


def fit_decay(times, values, window=None, norm=""):
    """Fit ``value ~ C (1 + t)^alpha`` on ``window = (t0, t1)`` (inclusive).

    Needs at least 10 strictly positive samples in the window and strictly
    increasing times; otherwise raises :class:`DegenerateSeries`.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise DegenerateSeries("times and values must be 1-D arrays of equal length")
    if np.any(np.diff(t) <= 0):
        raise DegenerateSeries("times must be strictly increasing")
    if window is None:
        window = (t[0], t[-1]) if t.size else (0.0, 0.0)
    t0, t1 = float(window[0]), float(window[1])
    if not t1 > t0:
        raise DegenerateSeries(f"fit window needs t1 > t0, got [{t0}, {t1}]")
    sel = (t >= t0) & (t <= t1)
    t, v = t[sel], v[sel]
    if t.size < 10:
        raise DegenerateSeries(f"only {t.size} samples in [{t0}, {t1}]; need >= 10")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise DegenerateSeries("values in the fit window must be finite and > 0")
    x = np.log1p(t)
    y = np.log(v)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    resid = y - (ym + slope * (x - xm))
    sse = float(np.sum(resid**2))
    sst = float(np.sum((y - ym) ** 2))
    stderr = math.sqrt(sse / (t.size - 2) / sxx)
    r2 = 1.0 if sst <= 1e-30 * max(1.0, float(np.sum(y**2))) else 1.0 - sse / sst
    if not math.isfinite(slope):
        raise DegenerateSeries("fitted exponent is not finite")
    return DecayFit(norm, t0, t1, slope, stderr, r2, int(t.size))
