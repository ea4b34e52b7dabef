"""Initial-data generators, analytic oracles and manufactured solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import sympy as sp
from scipy.special import gamma as gamma_fn
from scipy.special import gammainc

from .errors import InputError, InvalidCut, InvalidRange, VacuumViolation
from .model import CONSERVATIVE, PERTURBATION, State

__all__ = [
    "gen_powerlaw_field",
    "powerlaw_shell_norm",
    "heat_semigroup",
    "heat_decay_oracle",
    "HeatOracle",
    "ManufacturedSolution",
    "mms_forcing",
    "mms_residual",
    "builtin_mms",
    "unit_sphere_area",
]


def unit_sphere_area(d):
    """``|S^{d-1}|``: 2, 2 pi, 4 pi for d = 1, 2, 3."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


# -- power-law data ------------------------------------------------------------


def _full_kmag(grid):
    mesh = np.meshgrid(*grid.wavenumbers, indexing="ij", sparse=True)
    return np.sqrt(sum(k**2 for k in mesh))


def gen_powerlaw_field(grid, s_target, k_cut, seed, amplitude=1.0, dealias_safe=True):
    """Zero-mean field with ``|f^(k)| = amplitude |k|^(s_target - d/2)`` on ``0 < |k| <= k_cut``.

    Phases are uniform and Hermitian-paired (``theta(-k) = -theta(k)``), so
    the field is real.  ``k_cut`` must not exceed the dealiasing limit
    :attr:`Grid.dealias_kmax`; with ``dealias_safe=False`` (linear-only use)
    the Nyquist limit applies instead.
    """
    if not 0 <= s_target < 1.5:
        raise InvalidRange(f"s_target must lie in [0, 1.5), got {s_target}")
    if not amplitude > 0:
        raise InputError(f"amplitude must be > 0, got {amplitude}")
    limit = grid.dealias_kmax if dealias_safe else grid.nyquist_kmax
    if not 0 < k_cut <= limit * (1 + 1e-12):
        which = "dealias" if dealias_safe else "Nyquist"
        raise InvalidCut(f"K_cut = {k_cut} exceeds the {which} limit {limit:.6g} of {grid}")
    kmag = _full_kmag(grid)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2 * np.pi, size=grid.shape)
    mirror = theta
    for axis in range(grid.dim):
        mirror = np.roll(np.flip(mirror, axis=axis), 1, axis=axis)  # theta(-k)
    theta = theta - mirror
    band = (kmag > 0) & (kmag <= k_cut)
    with np.errstate(divide="ignore"):
        mag = np.where(band, amplitude * np.where(band, kmag, 1.0) ** (s_target - grid.dim / 2), 0.0)
    full = mag * np.exp(1j * theta)
    half = full[..., : grid.sizes[-1] // 2 + 1]
    return grid.inv(half)


def powerlaw_shell_norm(grid, s_target, k_cut, amplitude, s_prime):
    """Direct lattice sum for ``||Lambda^{-s'} f||`` of :func:`gen_powerlaw_field` data."""
    kmag = _full_kmag(grid)
    band = (kmag > 0) & (kmag <= k_cut)
    r = kmag[band]
    return float(np.sqrt(grid.volume * np.sum(amplitude**2 * r ** (2 * s_target - grid.dim - 2 * s_prime))))


def heat_semigroup(grid, f, t, diffusivity=1.0):
    """Exact ``exp(t nu Delta) f`` on the grid (scalar or stacked components)."""
    c = grid.forward(f)
    return grid.inv(c * np.exp(-diffusivity * t * grid.k2))


@dataclass(frozen=True)
class HeatOracle:
    """Continuum prediction for ``||Lambda^l exp(t nu Delta) f||`` of power-law data.

    ``n(t)^2 = c_d int_{k_min}^{K} r^(2l + 2s - 1) exp(-2 nu t r^2) dr`` with
    lattice density ``c_d = amplitude^2 V^2 / (2 pi)^d |S^{d-1}|``.
    """

    dim: int
    l: float
    s: float
    k_cut: float
    amplitude: float = 1.0
    volume: float = 1.0
    k_min: float = 0.0
    diffusivity: float = 1.0

    @property
    def exponent(self):
        """Asymptotic slope of ``log n`` against ``log t``."""
        return -(self.l + self.s) / 2

    @property
    def squared_exponent(self):
        return -(self.l + self.s)

    @property
    def density(self):
        d = self.dim
        return self.amplitude**2 * self.volume**2 / (2 * math.pi) ** d * unit_sphere_area(d)

    def _radial(self, t, r):
        """``int_0^r rho^(2a-1) exp(-beta rho^2) d rho`` in closed form."""
        a = self.l + self.s
        beta = 2 * self.diffusivity * t
        if r <= 0:
            return 0.0
        if a == 0:
            return math.inf
        if beta == 0:
            return r ** (2 * a) / (2 * a)
        return gamma_fn(a) * gammainc(a, beta * r * r) / (2 * beta**a)

    def __call__(self, t):
        """``n(t)`` for scalar or array ``t >= 0``."""
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty(ts.shape)
        for i, ti in enumerate(ts):
            if ti < 0:
                raise InvalidRange(f"oracle times must be >= 0, got {ti}")
            if self.l + self.s == 0 and self.k_min > 0:
                # integrand 1/r: log form avoids the divergent pieces
                from scipy.special import exp1

                beta = 2 * self.diffusivity * ti
                if beta == 0:
                    val = math.log(self.k_cut / self.k_min)
                else:
                    val = 0.5 * (exp1(beta * self.k_min**2) - exp1(beta * self.k_cut**2))
            else:
                val = self._radial(ti, self.k_cut) - self._radial(ti, self.k_min)
            out[i] = math.sqrt(self.density * val) if math.isfinite(val) else math.inf
        return out if np.ndim(t) else float(out[0])


def heat_decay_oracle(d, l, s, k_cut, amplitude=1.0, volume=1.0, k_min=0.0, diffusivity=1.0):
    """Oracle curve and exponent ``-(l + s)/2`` for heat flow of power-law data."""
    if l < 0:
        raise InvalidRange(f"need l >= 0, got {l}")
    if not 0 <= s < 1.5:
        raise InvalidRange(f"need s in [0, 1.5), got {s}")
    if not 0 <= k_min < k_cut:
        raise InvalidRange(f"need 0 <= k_min < K_cut, got {k_min}, {k_cut}")
    return HeatOracle(d, l, s, k_cut, amplitude, volume, k_min, diffusivity)


# -- manufactured solutions ------------------------------------------------------

T = sp.Symbol("t", real=True)
X = sp.symbols("x y z", real=True)


@dataclass
class ManufacturedSolution:
    """Closed-form ``(varrho*, u*, chi*)`` as sympy expressions in ``t`` and ``x, y, z``."""

    dim: int
    rho: sp.Expr
    u: tuple
    chi: sp.Expr
    name: str = "custom"

    def __post_init__(self):
        if self.dim not in (1, 2, 3) or len(self.u) != self.dim:
            raise InputError("manufactured velocity needs one component per dimension")
        self.rho = sp.sympify(self.rho)
        self.u = tuple(sp.sympify(c) for c in self.u)
        self.chi = sp.sympify(self.chi)

    @property
    def coords(self):
        return X[: self.dim]

    def _lambdify(self, expr):
        fn = sp.lambdify((T, *self.coords), expr, "numpy")
        return lambda grid, t: np.broadcast_to(np.asarray(fn(t, *grid.coords()), dtype=float), grid.shape).copy()

    def state(self, grid, t=0.0, formulation=PERTURBATION):
        rho = self._lambdify(self.rho)(grid, t)
        u = np.stack([self._lambdify(c)(grid, t) for c in self.u])
        chi = self._lambdify(self.chi)(grid, t)
        s = State(grid, rho, u, chi, t=t)
        return s.to_conservative() if formulation == CONSERVATIVE else s


def _grad(f, xs):
    return [sp.diff(f, x) for x in xs]


def _div(v, xs):
    return sum(sp.diff(c, x) for c, x in zip(v, xs))


def _lap(f, xs):
    return sum(sp.diff(f, x, 2) for x in xs)


def _korteweg(chi, xs):
    g = _grad(chi, xs)
    half = sum(c**2 for c in g) / 2
    d = len(xs)
    return [sum(sp.diff(g[i] * g[j] - (half if i == j else 0), xs[j]) for j in range(d)) for i in range(d)]


def _perturbation_tendency(ms, params):
    """Full right-hand side of the perturbation system on the manufactured fields."""
    xs = ms.coords
    mu, lam, ell = (sp.nsimplify(v) for v in (params.mu, params.lam, params.ell))
    a, gam = sp.nsimplify(params.pressure_scale), sp.nsimplify(params.gamma)
    r, u, c = ms.rho, ms.u, ms.chi
    dens = 1 + r
    visc = [mu * _lap(ui, xs) + (mu + lam) * sp.diff(_div(u, xs), xi) for ui, xi in zip(u, xs)]
    grad_r = _grad(r, xs)
    kor = _korteweg(c, xs)
    adv = [sum(u[j] * sp.diff(ui, xs[j]) for j in range(len(xs))) for ui in u]
    sound = a * gam * dens ** (gam - 2)  # 1 + g
    r_rho = -_div([dens * ui for ui in u], xs)
    r_u = [-adv[i] + visc[i] / dens - sound * grad_r[i] - ell * kor[i] / dens for i in range(len(xs))]
    u_grad_c = sum(ui * gi for ui, gi in zip(u, _grad(c, xs)))
    r_chi = -u_grad_c + ell * _lap(c, xs) / dens**2 - (c**3 - c) / (ell * dens)
    return r_rho, r_u, r_chi


def _conservative_tendency(ms, params):
    xs = ms.coords
    mu, lam, ell = (sp.nsimplify(v) for v in (params.mu, params.lam, params.ell))
    a, gam = sp.nsimplify(params.pressure_scale), sp.nsimplify(params.gamma)
    dens = 1 + ms.rho
    u, c = ms.u, ms.chi
    m = [dens * ui for ui in u]
    q = dens * c
    p = a * dens**gam
    div_u = _div(u, xs)
    kor = _korteweg(c, xs)
    d = len(xs)
    r_rho = -_div(m, xs)
    r_m = [
        -sum(sp.diff(m[i] * u[j], xs[j]) for j in range(d))
        - sp.diff(p, xs[i])
        + mu * _lap(u[i], xs)
        + (mu + lam) * sp.diff(div_u, xs[i])
        - ell * kor[i]
        for i in range(d)
    ]
    omega = -ell * _lap(c, xs) / dens + (c**3 - c) / ell
    r_q = -_div([q * ui for ui in u], xs) - omega
    return r_rho, r_m, r_q


def _forcing_exprs(ms, params, formulation):
    if formulation == PERTURBATION:
        unknowns = (ms.rho, ms.u, ms.chi)
        rhs = _perturbation_tendency(ms, params)
    else:
        dens = 1 + ms.rho
        unknowns = (dens, tuple(dens * ui for ui in ms.u), dens * ms.chi)
        rhs = _conservative_tendency(ms, params)
    f_rho = sp.diff(unknowns[0], T) - rhs[0]
    f_u = [sp.diff(ui, T) - ri for ui, ri in zip(unknowns[1], rhs[1])]
    f_chi = sp.diff(unknowns[2], T) - rhs[2]
    return f_rho, f_u, f_chi


def mms_forcing(ms, params, grid, formulation=PERTURBATION, simplify=False):
    """Forcing sampler ``F(t) -> (F_rho, F_u, F_chi)`` making ``ms`` an exact solution.

    ``F = d_t x* - RHS(x*)`` for the chosen formulation, derived symbolically
    (all nonlinear terms included) and sampled on ``grid``.  Raises
    :class:`VacuumViolation` if ``1 + varrho*`` drops below the vacuum floor
    on the grid at ``t = 0``.
    """
    if grid.dim != ms.dim:
        raise InputError(f"manufactured solution is {ms.dim}D but the grid is {grid.dim}D")
    dens0 = 1.0 + ms._lambdify(ms.rho)(grid, 0.0)
    if float(np.min(dens0)) < params.vacuum_floor:
        raise VacuumViolation(f"manufactured density {np.min(dens0):.4g} is below the vacuum floor")
    f_rho, f_u, f_chi = _forcing_exprs(ms, params, formulation)
    if simplify:
        f_rho, f_chi = sp.simplify(f_rho), sp.simplify(f_chi)
        f_u = [sp.simplify(e) for e in f_u]
    fr = ms._lambdify(f_rho)
    fu = [ms._lambdify(e) for e in f_u]
    fc = ms._lambdify(f_chi)

    def forcing(t):
        return fr(grid, t), np.stack([f(grid, t) for f in fu]), fc(grid, t)

    forcing.exprs = (f_rho, tuple(f_u), f_chi)
    return forcing


def mms_residual(ms, params, grid, t, formulation=PERTURBATION):
    """Max spatial residual of the forced semi-discrete system on the exact solution.

    Evaluates ``d_t x* - (A x* + N(x*)) - F`` with the discrete (dealiased,
    spectral) operators; it vanishes up to truncation once ``grid`` resolves
    every product.
    """
    from .integrators import Stepper, StepperConfig

    state = ms.state(grid, t, formulation)
    forcing = mms_forcing(ms, params, grid, formulation)
    stepper = Stepper(grid, params, StepperConfig(dt=1.0, t_end=1.0), formulation, forcing)
    phys, spec = stepper._split(state)
    nl = stepper._nonlinear(state, phys, spec)
    blocks = stepper._euler
    c2 = blocks.c2
    from .model import _linear_spec

    lin = _linear_spec(grid, *spec, params, c2)
    force = stepper._force(t)
    if formulation == PERTURBATION:
        dt_exprs = (ms.rho, ms.u, ms.chi)
    else:
        dens = 1 + ms.rho
        dt_exprs = (dens, tuple(dens * c for c in ms.u), dens * ms.chi)
    d_rho = ms._lambdify(sp.diff(dt_exprs[0], T))(grid, t)
    d_u = np.stack([ms._lambdify(sp.diff(c, T))(grid, t) for c in dt_exprs[1]])
    d_chi = ms._lambdify(sp.diff(dt_exprs[2], T))(grid, t)
    exact = (d_rho, d_u, d_chi)
    worst = 0.0
    for e, l_, n_, f_ in zip(exact, lin, nl, force):
        res = e - grid.inv(l_ + n_ + f_)
        worst = max(worst, float(np.max(np.abs(res))))
    return worst


def builtin_mms(name, dim):
    """Named manufactured solutions.

    ``chi_decay``: ``varrho* = u* = 0``, ``chi* = exp(-t) sin x``.
    ``coupled``: all three unknowns nontrivial, trigonometric in space and
    time, with ``|varrho*| <= 0.1``.
    """
    xs = X[:dim]
    zero = sp.Integer(0)
    if name == "chi_decay":
        return ManufacturedSolution(dim, zero, (zero,) * dim, sp.exp(-T) * sp.sin(xs[0]), name)
    if name == "coupled":
        tenth = sp.Rational(1, 10)
        rho = tenth * sp.cos(T) * sp.sin(sum(xs))
        u = tuple(tenth * sp.sin(T + i + 1) * sp.cos(xs[(i + 1) % dim]) for i in range(dim))
        chi = sp.Rational(1, 2) + sp.Rational(1, 5) * sp.exp(-T / 2) * sp.sin(xs[0])
        if dim > 1:
            chi = chi + sp.Rational(1, 10) * sp.cos(T) * sp.cos(xs[1])
        return ManufacturedSolution(dim, rho, u, chi, name)
    raise InputError(f"unknown manufactured solution {name!r}; choose chi_decay or coupled")
