"""IMEX time stepping with exact per-mode implicit solves.

The unknown vector ``x = (rho', u, chi)`` obeys ``x_t = A x + N(x) + F(t)``
where ``A`` is the constant-coefficient linear operator

    rho'_t = -div u
    u_t    = mu lap u + (mu + lam) grad div u - c2 grad rho'
    chi_t  = ell lap chi

(``c2 = 1`` for the perturbation form, ``p'(1)`` for the conservative form,
where ``rho' = rho - 1`` and ``u, chi`` stand for ``m`` and
``w = rho chi - chi_ref rho``, ``chi_ref`` being the reference phase).  ``A`` is
diagonal in Fourier space up to a 2x2 acoustic coupling between ``rho'`` and
the longitudinal velocity, so ``(c0 I - dt A)`` is inverted mode by mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CflViolation, InputError, NonFiniteData, PhysicsError, ValidationError
from .model import (
    CONSERVATIVE,
    PERTURBATION,
    State,
    _conservative_nonlinear,
    _perturbation_nonlinear,
    _sqrt_energy_spec,
)

__all__ = ["StepperConfig", "LinearBlocks", "build_linear_blocks", "Stepper", "step", "run", "RunResult"]

SCHEMES = ("euler", "bdf2")


@dataclass(frozen=True)
class StepperConfig:
    """Fixed-step integration settings.

    ``blowup_ceiling`` bounds ``sqrt(E_0^3)`` (measured with ``chi`` taken
    relative to the run's reference phase); ``None`` disables the check.
    """

    dt: float
    t_end: float
    scheme: str = "euler"
    cfl_guard: float = 0.5
    cadence: int = 1
    blowup_ceiling: float | None = 1.0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.dt > 0:
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        if not self.t_end >= 0:
            raise ValidationError(f"t_end must be >= 0, got {self.t_end}")
        if self.cadence < 1:
            raise ValidationError(f"cadence must be >= 1, got {self.cadence}")
        if not self.cfl_guard > 0:
            raise ValidationError(f"cfl_guard must be > 0, got {self.cfl_guard}")

    @property
    def nsteps(self):
        return int(round(self.t_end / self.dt))


class LinearBlocks:
    """Factored ``(c0 I - dt A(k))`` for every Fourier mode of a grid."""

    def __init__(self, grid, params, dt, c0=1.0, sound_speed_sq=1.0):
        if not params.mu > 0:
            raise InputError("linear blocks need mu > 0")
        self.grid = grid
        self.params = params
        self.dt = dt
        self.c0 = c0
        self.c2 = float(sound_speed_sq)
        mu, lam, ell = params.mu, params.lam, params.ell
        shape = grid.spectral_shape
        self.kd = np.ascontiguousarray(np.stack([np.broadcast_to(k, shape) for k in grid.kd]).reshape(grid.dim, -1))
        kd2 = grid.kd2.reshape(-1)
        k2 = grid.k2.reshape(-1)
        self.kd2 = np.ascontiguousarray(kd2)
        self.k2 = np.ascontiguousarray(k2)
        self.inv_t = 1.0 / (c0 + dt * mu * k2)
        with np.errstate(divide="ignore"):
            self.inv_kd2 = np.where(kd2 > 0, 1.0 / np.where(kd2 > 0, kd2, 1.0), 0.0)
        long_diag = c0 + dt * (mu * k2 + (mu + lam) * kd2)
        det = c0 * long_diag + dt * dt * self.c2 * kd2
        self.d_det = long_diag / det
        self.c0_det = c0 / det
        self.dt_det = dt / det
        self.chi_fac = 1.0 / (c0 + dt * ell * k2)

    def solve(self, b_rho, b_u, b_chi):
        """Return ``x`` with ``(c0 I - dt A) x = b`` (spectral arrays in, out)."""
        g = self.grid
        out = _kernels.implicit_solve(
            np.ascontiguousarray(b_rho).reshape(-1),
            np.ascontiguousarray(b_u).reshape(g.dim, -1),
            np.ascontiguousarray(b_chi).reshape(-1),
            self.kd,
            self.kd2,
            self.inv_t,
            self.inv_kd2,
            self.d_det,
            self.c0_det,
            self.dt_det,
            self.chi_fac,
            self.c2,
        )
        shape = g.spectral_shape
        return out[0].reshape(shape), out[1].reshape((g.dim,) + shape), out[2].reshape(shape)

    def operator(self, mode):
        """Dense ``A(k)`` of size ``d + 2`` for the flat mode index ``mode``."""
        d = self.grid.dim
        mu, lam, ell = self.params.mu, self.params.lam, self.params.ell
        kd = self.kd[:, mode]
        k2 = self.k2[mode]
        a = np.zeros((d + 2, d + 2), dtype=complex)
        a[0, 1 : d + 1] = -1j * kd
        a[1 : d + 1, 0] = -1j * kd * self.c2
        a[1 : d + 1, 1 : d + 1] = -mu * k2 * np.eye(d) - (mu + lam) * np.outer(kd, kd)
        a[d + 1, d + 1] = -ell * k2
        return a


def build_linear_blocks(grid, params, dt, c0=1.0, sound_speed_sq=1.0):
    return LinearBlocks(grid, params, dt, c0=c0, sound_speed_sq=sound_speed_sq)


@dataclass
class RunResult:
    state: State
    records: list = field(default_factory=list)
    status: str = "ok"
    error: Exception | None = None


class Stepper:
    """Advances states of one formulation with a fixed step.

    ``forcing(t)``, when given, returns physical ``(F_rho, F_u, F_chi)`` added
    to the right-hand side; it is sampled at the new time level of each step.
    BDF2 keeps the previous level in memory; :meth:`prime` restores it from a
    stored state so that restarts are bit-exact.  ``linear=True`` drops the
    nonlinear terms (``N = 0``), leaving the exactly solved linear system.
    """

    def __init__(self, grid, params, config, formulation=PERTURBATION, forcing=None, chi_ref=0.0, linear=False):
        self.grid = grid
        self.linear = linear
        self.params = params
        self.config = config
        self.formulation = formulation
        self.forcing = forcing
        self.chi_ref = chi_ref
        c2 = 1.0 if formulation == PERTURBATION else params.sound_speed_sq
        dt = config.dt
        self._euler = LinearBlocks(grid, params, dt, 1.0, c2)
        if config.scheme == "bdf2":
            self._bdf = LinearBlocks(grid, params, dt, 1.5, c2)
            self._half = LinearBlocks(grid, params, 0.5 * dt, 1.0, c2)
        self._prev = None  # (spectral x_{n-1}, spectral N_{n-1})
        min_dx = min(grid.spacing)
        self._cfl_scale = dt / min_dx

    # -- pieces -----------------------------------------------------------
    def _split(self, state):
        """Physical and spectral unknowns ``(rho', u, chi)`` of a state."""
        g = self.grid
        if self.formulation == PERTURBATION:
            phys = (state.rho, state.u, state.chi)
        else:
            phys = (state.rho - 1.0, state.u, state.chi - self.chi_ref * state.rho)
        return phys, tuple(g.fwd(a) for a in phys)

    def _nonlinear(self, state, phys, spec):
        g = self.grid
        if self.linear:
            return tuple(np.zeros_like(c) for c in spec)
        if self.formulation == PERTURBATION:
            return _perturbation_nonlinear(g, state.rho, state.u, state.chi, *spec, self.params)
        return _conservative_nonlinear(g, state.rho, state.u, state.chi, *spec, self.params, self.chi_ref)

    def _force(self, t):
        if self.forcing is None:
            return None
        f_rho, f_u, f_chi = (self.grid.fwd(np.asarray(a, dtype=float)) for a in self.forcing(t))
        if self.formulation == CONSERVATIVE and self.chi_ref:
            f_chi = f_chi - self.chi_ref * f_rho
        return f_rho, f_u, f_chi

    def _check(self, state):
        if self.formulation == PERTURBATION:
            u = state.u
        else:
            u = state.u / state.rho
        speed = float(np.max(np.sqrt(np.sum(u**2, axis=0))))
        if not np.isfinite(speed):
            raise NonFiniteData(f"non-finite velocity at t={state.t}")
        cfl = speed * self._cfl_scale
        if cfl > self.config.cfl_guard:
            raise CflViolation(f"CFL number {cfl:.4g} exceeds guard {self.config.cfl_guard} at t={state.t}")

    def _finish(self, spec, state, t, step):
        g = self.grid
        rho, u, chi = (g.inv(a) for a in spec)
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(u)) and np.all(np.isfinite(chi))):
            raise NonFiniteData(f"solution became non-finite at t={t}")
        if self.formulation == CONSERVATIVE:
            rho = rho + 1.0
            if self.chi_ref:
                chi = chi + self.chi_ref * rho
        new = State(g, rho, u, chi, t=t, formulation=self.formulation, step=step)
        ceiling = self.config.blowup_ceiling
        if ceiling is not None:
            c_rho, c_u, c_chi = spec
            if self.formulation == CONSERVATIVE:
                varrho, vel, phase = new.primitive()
                c_rho, c_u, c_chi = g.fwd(varrho), g.fwd(vel), g.fwd(phase)
            c_chi = c_chi.copy()
            c_chi[(0,) * g.dim] -= self.chi_ref
            size = _sqrt_energy_spec(g, c_rho, c_u, c_chi, 3)
            if not size <= ceiling:
                raise NonFiniteData(f"blow-up: sqrt(E_0^3) = {size:.4g} exceeds {ceiling} at t={t}")
        return new

    def _euler_update(self, blocks, dt, spec, nl, force):
        b = [x + dt * n for x, n in zip(spec, nl)]
        if force is not None:
            b = [x + dt * f for x, f in zip(b, force)]
        return blocks.solve(*b)

    def time_of(self, base, step):
        return base + step * self.config.dt

    # -- public -----------------------------------------------------------
    def reset(self):
        self._prev = None

    def prime(self, previous):
        """Seed the BDF2 history with the state one step before the next one."""
        phys, spec = self._split(previous)
        self._prev = (spec, self._nonlinear(previous, phys, spec))

    def advance(self, state, base=0.0):
        """Take one step from ``state``; times are ``base + step * dt``."""
        self._check(state)
        dt = self.config.dt
        phys, spec = self._split(state)
        nl = self._nonlinear(state, phys, spec)
        n1 = state.step + 1
        t1 = self.time_of(base, n1)
        if self.config.scheme == "euler":
            new_spec = self._euler_update(self._euler, dt, spec, nl, self._force(t1))
        elif self._prev is None:
            half = 0.5 * dt
            mid_spec = self._euler_update(self._half, half, spec, nl, self._force(base + (state.step + 0.5) * dt))
            mid = self._finish(mid_spec, state, base + (state.step + 0.5) * dt, state.step)
            self._check(mid)
            mphys, mspec = self._split(mid)
            mnl = self._nonlinear(mid, mphys, mspec)
            new_spec = self._euler_update(self._half, half, mspec, mnl, self._force(t1))
        else:
            prev_spec, prev_nl = self._prev
            b = [2.0 * x - 0.5 * xp + dt * (2.0 * n - n_p) for x, xp, n, n_p in zip(spec, prev_spec, nl, prev_nl)]
            force = self._force(t1)
            if force is not None:
                b = [x + dt * f for x, f in zip(b, force)]
            new_spec = self._bdf.solve(*b)
        self._prev = (spec, nl)
        return self._finish(new_spec, state, t1, n1)


def step(state, config, params, forcing=None, previous=None, chi_ref=0.0, linear=False):
    """One step of ``config.scheme`` from ``state``.

    For BDF2, ``previous`` is the state one step earlier; without it the step
    is bootstrapped by two half-size IMEX-Euler steps.
    """
    stepper = Stepper(state.grid, params, config, state.formulation, forcing, chi_ref, linear)
    if previous is not None and config.scheme == "bdf2":
        stepper.prime(previous)
    base = state.t - state.step * config.dt
    return stepper.advance(state, base)


def run(initial, config, params, recorder=None, forcing=None, chi_ref=0.0, previous=None, on_step=None, linear=False):
    """Advance ``initial`` to ``config.t_end``.

    ``recorder(state)`` is called at step 0 and every ``config.cadence`` steps
    (and at the final step); its return values form ``RunResult.records``.
    ``on_step(state, previous_state)`` is called after every step.  On a
    physics failure the exception is re-raised with the partial
    :class:`RunResult` attached as ``err.result``.
    """
    stepper = Stepper(initial.grid, params, config, initial.formulation, forcing, chi_ref, linear)
    if previous is not None and config.scheme == "bdf2":
        stepper.prime(previous)
    dt = config.dt
    base = initial.t - initial.step * dt
    last = int(round((config.t_end - base) / dt))
    state = initial
    records = []

    def _record(s):
        if recorder is not None:
            records.append(recorder(s))

    _record(state)
    try:
        while state.step < last:
            prev = state
            state = stepper.advance(state, base)
            if on_step is not None:
                on_step(state, prev)
            if state.step % config.cadence == 0 or state.step == last:
                _record(state)
    except PhysicsError as err:
        err.result = RunResult(state, records, type(err).__name__, err)
        raise
    return RunResult(state, records)


def amplification_radius(blocks):
    """Spectral radius of ``(c0 I - dt A(k))^{-1} c0`` for every mode (dense check)."""
    radii = np.empty(blocks.kd.shape[1])
    d = blocks.grid.dim
    eye = np.eye(d + 2)
    for mode in range(radii.size):
        m = blocks.c0 * np.linalg.inv(blocks.c0 * eye - blocks.dt * blocks.operator(mode))
        radii[mode] = np.max(np.abs(np.linalg.eigvals(m)))
    return radii


def expected_steps(t_end, dt):
    return int(math.floor(t_end / dt + 0.5))
