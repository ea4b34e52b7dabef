"""Compressible Navier-Stokes-Allen-Cahn model.

Two equivalent formulations are supported.  The *perturbation* form evolves
``(varrho, u, chi)`` with ``varrho = rho - 1`` and splits every equation into
a constant-coefficient linear part (handled implicitly by the integrators)
and a nonlinear remainder.  The *conservative* form evolves
``(rho, m = rho u, q = rho chi)`` directly.

Pressure is ``p(rho) = a rho^gamma`` and the specific free energy is

    Phi(rho, chi) = rho^(gamma-1) / (gamma-1) + (chi^4/4 - chi^2/2) / ell.

All pointwise products are dealiased with the 2/3 rule before they enter a
derivative or a tendency.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .errors import InputError, InvalidRange, NonFiniteData, ValidationError, VacuumViolation

__all__ = [
    "PERTURBATION",
    "CONSERVATIVE",
    "ModelParams",
    "State",
    "coefficients",
    "pressure",
    "free_energy",
    "korteweg_div",
    "chemical_potential",
    "perturbation_rhs",
    "conservative_rhs",
    "linear_rhs",
    "physical_energy",
    "dissipation_rate",
    "energy_functional",
    "sqrt_energy",
]

PERTURBATION = "perturbation"
CONSERVATIVE = "conservative"


@dataclass(frozen=True)
class ModelParams:
    """Physical constants.

    ``pressure_scale`` is ``a`` in ``p = a rho^gamma``; left as ``None`` it
    becomes ``1 / gamma`` so that ``p'(1) = 1``.  Thermodynamic consistency
    with ``Phi`` instead needs ``a = 1``.
    """

    mu: float = 1.0
    lam: float = 0.0
    gamma: float = 2.0
    ell: float = 1.0
    pressure_scale: float | None = None
    vacuum_floor: float = 0.25
    smallness_delta: float = 1e-2

    def __post_init__(self):
        if self.pressure_scale is None:
            object.__setattr__(self, "pressure_scale", 1.0 / self.gamma)
        checks = [
            (self.mu > 0, "mu > 0 (μ > 0)"),
            (2 * self.mu + 3 * self.lam >= 0, "2*mu + 3*lambda >= 0 (2μ+3λ ≥ 0)"),
            (self.gamma > 1, "gamma > 1 (γ > 1)"),
            (self.ell > 0, "ell > 0 (ℓ > 0)"),
            (self.pressure_scale > 0, "pressure_scale > 0"),
            (0 < self.vacuum_floor < 1, "0 < vacuum_floor < 1"),
            (self.smallness_delta > 0, "smallness_delta > 0"),
        ]
        for ok, rule in checks:
            if not ok:
                raise ValidationError(f"model parameters violate {rule}")

    @property
    def sound_speed_sq(self):
        """``p'(1) = a gamma``."""
        return self.pressure_scale * self.gamma


@dataclass
class State:
    """Unknowns at one time level.

    In the perturbation formulation ``rho, u, chi`` hold ``varrho = rho - 1``,
    the velocity and the phase field.  In the conservative formulation they
    hold ``rho``, the momentum ``m = rho u`` and ``rho chi``.  ``u`` has shape
    ``(d, *grid.shape)``.  ``step`` counts fixed time steps taken so far.
    """

    grid: object
    rho: np.ndarray
    u: np.ndarray
    chi: np.ndarray
    t: float = 0.0
    formulation: str = PERTURBATION
    step: int = 0

    def __post_init__(self):
        if self.formulation not in (PERTURBATION, CONSERVATIVE):
            raise InputError(f"unknown formulation {self.formulation!r}")
        g = self.grid
        self.rho = g.check_real(self.rho)
        self.u = g.check_real(self.u, vector=True)
        self.chi = g.check_real(self.chi)

    @classmethod
    def zeros(cls, grid, chi=0.0, formulation=PERTURBATION):
        base = 1.0 if formulation == CONSERVATIVE else 0.0
        return cls(
            grid,
            np.full(grid.shape, base),
            np.zeros((grid.dim,) + grid.shape),
            np.full(grid.shape, float(chi)),
            formulation=formulation,
        )

    def fields(self):
        """Scalar components in checkpoint order ``rho, u_1..u_d, chi``."""
        return [self.rho, *self.u, self.chi]

    def copy(self):
        return replace(self, rho=self.rho.copy(), u=self.u.copy(), chi=self.chi.copy())

    def primitive(self):
        """``(varrho, u, chi)`` regardless of the stored formulation."""
        if self.formulation == PERTURBATION:
            return self.rho, self.u, self.chi
        return self.rho - 1.0, self.u / self.rho, self.chi / self.rho

    def to_conservative(self):
        if self.formulation == CONSERVATIVE:
            return self
        dens = 1.0 + self.rho
        return replace(self, rho=dens, u=dens * self.u, chi=dens * self.chi, formulation=CONSERVATIVE)

    def to_perturbation(self):
        if self.formulation == PERTURBATION:
            return self
        varrho, u, chi = self.primitive()
        return replace(self, rho=varrho, u=u, chi=chi, formulation=PERTURBATION)

    def density(self):
        return self.rho + 1.0 if self.formulation == PERTURBATION else self.rho


def _check_vacuum(min_density, params):
    if not np.isfinite(min_density):
        raise NonFiniteData("density is not finite")
    if min_density < params.vacuum_floor:
        raise VacuumViolation(
            f"min density {min_density:.6g} fell below the vacuum floor {params.vacuum_floor}"
        )


# -- closures --------------------------------------------------------------


def coefficients(rho, params, which=None):
    """Coefficient functions ``h, g, phi, varphi`` of ``varrho``.

    ``h = r/(1+r)``, ``g = p'(1+r)/(1+r) - 1 = a gamma (1+r)^(gamma-2) - 1``,
    ``phi = 1/(1+r)``, ``varphi = r(r+2)/(1+r)^2``.  With ``which`` set to one
    of those names only that function is returned.
    """
    rho = np.asarray(rho, dtype=float)
    flat = np.ascontiguousarray(rho).reshape(-1)
    h, g, phi, varphi, lo = _kernels.closures(flat, params.sound_speed_sq, params.gamma)
    _check_vacuum(lo, params)
    out = {
        "h": h.reshape(rho.shape),
        "g": g.reshape(rho.shape),
        "phi": phi.reshape(rho.shape),
        "varphi": varphi.reshape(rho.shape),
    }
    if which is None:
        return out
    if which not in out:
        raise InputError(f"unknown coefficient {which!r}")
    return out[which]


def pressure(rho, params):
    rho = np.asarray(rho, dtype=float)
    _check_vacuum(float(np.min(rho)), params)
    return params.pressure_scale * rho**params.gamma


def free_energy(rho, chi, params):
    """Specific free energy ``Phi(rho, chi)``."""
    rho = np.asarray(rho, dtype=float)
    _check_vacuum(float(np.min(rho)), params)
    g = params.gamma
    return rho ** (g - 1) / (g - 1) + (chi**4 / 4 - chi**2 / 2) / params.ell


# -- capillary stress ------------------------------------------------------


def _korteweg_spec(grid, grad_chi):
    """Coefficients of ``div(grad chi (x) grad chi - |grad chi|^2 I / 2)``.

    ``grad_chi`` holds the physical gradient components.
    """
    d = grid.dim
    half_sq = 0.5 * np.sum(grad_chi**2, axis=0)
    out = np.zeros((d,) + grid.spectral_shape, dtype=complex)
    for i in range(d):
        for j in range(i, d):
            t_ij = grad_chi[i] * grad_chi[j]
            if i == j:
                t_ij = t_ij - half_sq
            c = grid.fwd(t_ij) * grid.dealias_mask
            out[i] += 1j * grid.kd[j] * c
            if j != i:
                out[j] += 1j * grid.kd[i] * c
    return out


def korteweg_div(grid, chi):
    """Divergence of the capillary stress, as a physical vector field."""
    c = grid.forward(chi)
    grad = grid.inv(np.stack([1j * k * c for k in grid.kd]))
    return grid.inv(_korteweg_spec(grid, grad))


def chemical_potential(state, params):
    """``omega = -ell lap(chi) / rho + (chi^3 - chi) / ell`` (physical field)."""
    grid = state.grid
    _, _, chi = state.primitive()
    dens = state.density()
    _check_vacuum(float(np.min(dens)), params)
    lap = grid.inv(-grid.k2 * grid.forward(chi))
    return -params.ell * lap / dens + (chi**3 - chi) / params.ell


# -- right-hand sides ------------------------------------------------------


def _cube_minus(grid, chi):
    """Physical ``chi^3 - chi`` with the square dealiased before the second product."""
    sq = grid.inv(grid.product(chi, chi))
    return grid.inv(grid.product(sq, chi)) - chi


def _perturbation_nonlinear(grid, rho, u, chi, c_rho, c_u, c_chi, params):
    """Spectral nonlinear tendencies from physical fields and their coefficients."""
    d = grid.dim
    mu, lam, ell = params.mu, params.lam, params.ell
    flat = np.ascontiguousarray(rho).reshape(-1)
    h, g, phi, varphi, lo = _kernels.closures(flat, params.sound_speed_sq, params.gamma)
    _check_vacuum(lo, params)
    h, g, phi, varphi = (a.reshape(grid.shape) for a in (h, g, phi, varphi))

    ik = [1j * k for k in grid.kd]
    grad_rho = grid.inv(np.stack([k * c_rho for k in ik]))
    grad_u = grid.inv(np.stack([[k * c_u[i] for k in ik] for i in range(d)]))  # [i, j] = d_j u_i
    div_c = sum(ik[j] * c_u[j] for j in range(d))
    visc = grid.inv(np.stack([-mu * grid.k2 * c_u[i] + (mu + lam) * ik[i] * div_c for i in range(d)]))
    grad_chi = grid.inv(np.stack([k * c_chi for k in ik]))
    lap_chi = grid.inv(-grid.k2 * c_chi)
    capillary = grid.inv(_korteweg_spec(grid, grad_chi))

    flux = grid.fwd(rho * u) * grid.dealias_mask
    n_rho = -sum(ik[j] * flux[j] for j in range(d))

    adv = np.zeros_like(u)
    for i in range(d):
        for j in range(d):
            adv[i] += u[j] * grad_u[i, j]
    phys_u = -adv - h * visc - g * grad_rho - (ell * phi) * capillary
    n_u = grid.fwd(phys_u) * grid.dealias_mask

    u_grad_chi = np.sum(u * grad_chi, axis=0)
    phys_chi = -u_grad_chi - (ell * varphi) * lap_chi - phi * _cube_minus(grid, chi) / ell
    n_chi = grid.fwd(phys_chi) * grid.dealias_mask
    return n_rho, n_u, n_chi


def _require(state, formulation):
    if state.formulation != formulation:
        raise InputError(f"expected a {formulation} state, got {state.formulation}")


def perturbation_rhs(state, params):
    """Nonlinear tendencies ``(N_rho, N_u, N_chi)`` of the perturbation form.

    The linear parts ``-div u``, ``mu lap u + (mu+lam) grad div u - grad rho``
    and ``ell lap chi`` are excluded; see :func:`linear_rhs`.
    """
    _require(state, PERTURBATION)
    grid = state.grid
    c = [grid.fwd(a) for a in (state.rho, state.u, state.chi)]
    out = _perturbation_nonlinear(grid, state.rho, state.u, state.chi, *c, params)
    return tuple(grid.inv(a) for a in out)


def _linear_spec(grid, c_rho, c_u, c_chi, params, c2):
    ik = [1j * k for k in grid.kd]
    d = grid.dim
    div_c = sum(ik[j] * c_u[j] for j in range(d))
    l_rho = -div_c
    l_u = np.stack(
        [-params.mu * grid.k2 * c_u[i] + (params.mu + params.lam) * ik[i] * div_c - c2 * ik[i] * c_rho for i in range(d)]
    )
    l_chi = -params.ell * grid.k2 * c_chi
    return l_rho, l_u, l_chi


def linear_rhs(state, params):
    """Tendencies of the implicit linear operator for either formulation.

    For conservative states the operator acts on ``(rho - 1, m, rho chi)`` with
    sound speed squared ``p'(1)``; for perturbation states it uses ``1``.
    """
    grid = state.grid
    if state.formulation == PERTURBATION:
        c_rho, c2 = grid.fwd(state.rho), 1.0
    else:
        c_rho, c2 = grid.fwd(state.rho - 1.0), params.sound_speed_sq
    out = _linear_spec(grid, c_rho, grid.fwd(state.u), grid.fwd(state.chi), params, c2)
    return tuple(grid.inv(a) for a in out)


def _conservative_full(grid, dens, m, q, c_m, params):
    """Spectral full tendencies of ``(rho, m, rho chi)``."""
    d = grid.dim
    mu, lam, ell = params.mu, params.lam, params.ell
    _check_vacuum(float(np.min(dens)), params)
    ik = [1j * k for k in grid.kd]
    inv_dens = 1.0 / dens
    c_vel = grid.product(m, inv_dens)
    vel = grid.inv(c_vel)
    c_chi = grid.product(q, inv_dens)
    chi = grid.inv(c_chi)

    r_rho = -sum(ik[j] * c_m[j] for j in range(d))

    c_p = grid.fwd(params.pressure_scale * dens**params.gamma) * grid.dealias_mask
    div_vel = sum(ik[j] * c_vel[j] for j in range(d))
    grad_chi = grid.inv(np.stack([k * c_chi for k in ik]))
    cap = _korteweg_spec(grid, grad_chi)
    r_m = np.empty((d,) + grid.spectral_shape, dtype=complex)
    for i in range(d):
        flux = grid.fwd(m[i] * vel) * grid.dealias_mask  # row i of m (x) u
        r_m[i] = (
            -sum(ik[j] * flux[j] for j in range(d))
            - ik[i] * c_p
            - mu * grid.k2 * c_vel[i]
            + (mu + lam) * ik[i] * div_vel
            - ell * cap[i]
        )

    flux_q = grid.fwd(q * vel) * grid.dealias_mask
    lap_chi = grid.inv(-grid.k2 * c_chi)
    omega = -ell * grid.inv(grid.product(lap_chi, inv_dens)) + _cube_minus(grid, chi) / ell
    r_q = -sum(ik[j] * flux_q[j] for j in range(d)) - grid.fwd(omega) * grid.dealias_mask
    return r_rho, r_m, r_q


def conservative_rhs(state, params):
    """Full tendencies ``(d_t rho, d_t m, d_t (rho chi))`` of the conservative form."""
    _require(state, CONSERVATIVE)
    grid = state.grid
    out = _conservative_full(grid, state.rho, state.u, state.chi, grid.fwd(state.u), params)
    return tuple(grid.inv(a) for a in out)


def _conservative_nonlinear(grid, dens, m, q, c_drho, c_m, c_w, params, chi_ref=0.0):
    """Nonlinear tendencies for the unknowns ``(rho - 1, m, w = rho chi - chi_ref rho)``.

    Shifting ``rho chi`` by ``chi_ref rho`` removes the O(1) acoustic coupling
    ``-chi_ref div m`` from the phase equation, which the explicit treatment
    would otherwise resolve only to O(dt).

    The linear part is removed on the dealiased modes only.  Above the 2/3
    cutoff the (truncated) full tendency vanishes, so subtracting ``A x``
    there would cancel the implicit operator and leave those modes undamped;
    instead they evolve under the linear operator alone, as in the
    perturbation form.
    """
    r_rho, r_m, r_q = _conservative_full(grid, dens, m, q, c_m, params)
    if chi_ref:
        r_q = r_q - chi_ref * r_rho
    mask = grid.dealias_mask
    lin = _linear_spec(grid, c_drho * mask, c_m * mask, c_w * mask, params, params.sound_speed_sq)
    return r_rho - lin[0], r_m - lin[1], r_q - lin[2]


# -- energies --------------------------------------------------------------


def physical_energy(state, params):
    """``F = int (rho |u|^2 / 2 + rho Phi + ell |grad chi|^2 / 2) dx`` (rectangle rule)."""
    grid = state.grid
    _, u, chi = state.primitive()
    dens = state.density()
    integrand = 0.5 * dens * np.sum(u**2, axis=0) + dens * free_energy(dens, chi, params)
    grad = grid.inv(grid.gradient(grid.forward(chi)))
    integrand = integrand + 0.5 * params.ell * np.sum(grad**2, axis=0)
    return float(np.sum(integrand) * grid.cell_volume)


def dissipation_rate(state, params):
    """``int (mu |grad u|^2 + (mu+lam) (div u)^2 + omega^2) dx``; ``dF/dt = -`` this."""
    grid = state.grid
    _, u, _ = state.primitive()
    c_u = grid.forward(u)
    grad_sq = sum(grid.l2sq(grid.gradient(c_u[i])) for i in range(grid.dim))
    div_sq = grid.l2sq(grid.divergence(c_u))
    omega = chemical_potential(state, params)
    return params.mu * grad_sq + (params.mu + params.lam) * div_sq + float(np.sum(omega**2) * grid.cell_volume)


def energy_functional(state, l, m, eta, chi_ref=0.0):
    """Lyapunov functional ``E_l^m`` with cross-term weight ``eta``.

    ``sum_{l<=k<=m} (|L^k rho|^2 + |L^k u|^2 + |L^k chi|^2 + |L^(k+1) chi|^2)
    + eta sum_{l<=k<m} <L^k u, L^k grad rho>`` with ``L = Lambda``.  Positive
    definite for ``0 <= eta < 1``.  ``chi`` is measured from ``chi_ref``.
    """
    if l < 0 or l > m or l != int(l) or m != int(m):
        raise InvalidRange(f"need integers 0 <= l <= m, got l={l}, m={m}")
    if not 0 <= eta < 1:
        raise InvalidRange(f"cross-term weight must lie in [0, 1), got {eta}")
    _require(state, PERTURBATION)
    grid = state.grid
    c_rho = grid.fwd(state.rho)
    c_u = grid.fwd(state.u)
    c_chi = grid.fwd(state.chi - chi_ref)
    return _energy_functional_spec(grid, c_rho, c_u, c_chi, int(l), int(m), eta)


def _energy_functional_spec(grid, c_rho, c_u, c_chi, l, m, eta):
    w = grid.weights
    a_rho = w * (c_rho.real**2 + c_rho.imag**2)
    a_u = w * np.sum(c_u.real**2 + c_u.imag**2, axis=0)
    a_chi = w * (c_chi.real**2 + c_chi.imag**2)
    k2 = grid.k2
    level = sum(k2**k for k in range(l, m + 1))
    total = np.sum(level * (a_rho + a_u + a_chi * (1.0 + k2)))
    if eta and m > l:
        grad_rho = np.stack([1j * k * c_rho for k in grid.kd])
        cross = w * np.sum(c_u.real * grad_rho.real + c_u.imag * grad_rho.imag, axis=0)
        total = total + eta * np.sum(sum(k2**k for k in range(l, m)) * cross)
    return grid.volume * float(total)


def sqrt_energy(state, order=3, chi_ref=0.0):
    """``|rho|_{H^N} + |u|_{H^N} + |chi|_{H^N} + |grad chi|_{H^N}`` for ``N = order``."""
    grid = state.grid
    varrho, u, chi = state.primitive()
    return _sqrt_energy_spec(grid, grid.fwd(varrho), grid.fwd(u), grid.fwd(chi - chi_ref), order)


def _sqrt_energy_spec(grid, c_rho, c_u, c_chi, order):
    weight = sum(grid.k2**l for l in range(order + 1))
    w = grid.weights * weight
    vol = grid.volume
    s_rho = vol * np.sum(w * (c_rho.real**2 + c_rho.imag**2))
    s_u = vol * np.sum(w * np.sum(c_u.real**2 + c_u.imag**2, axis=0))
    a_chi = c_chi.real**2 + c_chi.imag**2
    s_chi = vol * np.sum(w * a_chi)
    s_grad = vol * np.sum(w * grid.k2 * a_chi)
    return float(np.sqrt(s_rho) + np.sqrt(s_u) + np.sqrt(s_chi) + np.sqrt(s_grad))
