import math

import numpy as np
import pytest
import sympy as sp

from nsac.diagnostics import fit_decay
from nsac.errors import InputError, InvalidCut, InvalidRange, VacuumViolation
from nsac.experiments import (
    X,
    ManufacturedSolution,
    T,
    builtin_mms,
    gen_powerlaw_field,
    heat_decay_oracle,
    heat_semigroup,
    mms_forcing,
    mms_residual,
    powerlaw_shell_norm,
    unit_sphere_area,
)
from nsac.grid import make_grid
from nsac.integrators import StepperConfig, run
from nsac.model import CONSERVATIVE, PERTURBATION, ModelParams
from nsac.norms import lambda_norm, neg_sobolev_norm

TWO_PI = 2 * np.pi


def test_unit_sphere_area():
    assert unit_sphere_area(1) == pytest.approx(2.0)
    assert unit_sphere_area(2) == pytest.approx(TWO_PI)
    assert unit_sphere_area(3) == pytest.approx(4 * np.pi)


# -- power-law data ----------------------------------------------------------------


def test_powerlaw_single_shell_1d():
    g = make_grid(1, [16], [TWO_PI])
    f = gen_powerlaw_field(g, 0.5, 1.0, seed=3, amplitude=0.7)
    c = g.forward(f)
    assert abs(c[1]) == pytest.approx(0.7, rel=1e-13)
    rest = np.abs(c).copy()
    rest[1] = 0
    assert np.max(rest) < 1e-15
    assert abs(np.mean(f)) < 1e-15


def test_powerlaw_deterministic():
    g = make_grid(2, [16, 16], [TWO_PI, TWO_PI])
    a = gen_powerlaw_field(g, 0.3, 4.0, seed=9)
    b = gen_powerlaw_field(g, 0.3, 4.0, seed=9)
    c = gen_powerlaw_field(g, 0.3, 4.0, seed=10)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_powerlaw_profile_3d():
    g = make_grid(3, [16, 16, 16], [TWO_PI] * 3)
    s, kc, amp = 0.5, 4.0, 2.0
    f = gen_powerlaw_field(g, s, kc, seed=1, amplitude=amp)
    full = g.to_full(g.forward(f))
    kmag = np.sqrt(sum(k**2 for k in np.meshgrid(*g.wavenumbers, indexing="ij")))
    band = (kmag > 0) & (kmag <= kc)
    assert np.allclose(np.abs(full[band]), amp * kmag[band] ** (s - 1.5), rtol=1e-12)
    assert np.max(np.abs(full[~band])) < 1e-14


def test_powerlaw_negative_norms_match_shell_sums():
    # a large box puts every populated mode below |k| = 1, where the
    # Hdot^{-s'} norm grows with s' as in the continuum
    g = make_grid(3, [32, 32, 32], [100.0] * 3)
    s, kc, amp = 0.5, 0.6, 1.3
    f = gen_powerlaw_field(g, s, kc, seed=2, amplitude=amp)
    previous = 0.0
    for sp_ in (0.0, 0.1, 0.25, 0.4, 0.49):
        val = neg_sobolev_norm(g, f, sp_) if sp_ > 0 else lambda_norm(g, f, 0)
        assert val == pytest.approx(powerlaw_shell_norm(g, s, kc, amp, sp_), rel=1e-10)
        assert np.isfinite(val) and val > previous
        previous = val


def test_powerlaw_errors():
    g = make_grid(1, [12], [TWO_PI])
    with pytest.raises(InvalidCut):
        gen_powerlaw_field(g, 0.5, 5.0, seed=0)  # dealias limit is 4
    gen_powerlaw_field(g, 0.5, 5.0, seed=0, dealias_safe=False)  # Nyquist limit is 6
    with pytest.raises(InvalidCut):
        gen_powerlaw_field(g, 0.5, 7.0, seed=0, dealias_safe=False)
    with pytest.raises(InvalidRange):
        gen_powerlaw_field(g, 1.5, 1.0, seed=0)
    with pytest.raises(InputError):
        gen_powerlaw_field(g, 0.5, 1.0, seed=0, amplitude=0.0)


# -- heat oracle ---------------------------------------------------------------------


def test_oracle_closed_form():
    o = heat_decay_oracle(1, 0, 0.5, 1e3)
    for t in (1.0, 10.0, 50.0):
        want = math.gamma(0.5) / (2 * (2 * t) ** 0.5)
        assert o(t) ** 2 / o.density == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("l,s,slope", [(0, 0.5, -0.25), (1, 0.0, -0.5)])
def test_oracle_fitted_slopes(l, s, slope):
    o = heat_decay_oracle(3, l, s, 1.0, amplitude=2.0, volume=8.0)
    assert o.exponent == pytest.approx(slope)
    ts = np.linspace(10, 100, 91)
    fit = fit_decay(ts, o(ts), (10, 100))
    assert fit.exponent == pytest.approx(slope, abs=0.02)


def test_oracle_at_time_zero_matches_data_norm():
    o = heat_decay_oracle(3, 1, 0.5, 2.0, k_min=0.5)
    # n(0)^2 = c_d int r^(2a-1) dr
    want = o.density * (2.0**3 - 0.5**3) / 3
    assert o(0.0) == pytest.approx(math.sqrt(want))
    log_oracle = heat_decay_oracle(2, 0, 0, 2.0, k_min=0.5)
    assert log_oracle(0.0) == pytest.approx(math.sqrt(log_oracle.density * math.log(4)))
    assert math.isinf(heat_decay_oracle(2, 0, 0, 2.0)(1.0))


def test_oracle_validation():
    with pytest.raises(InvalidRange):
        heat_decay_oracle(3, -1, 0.5, 1.0)
    with pytest.raises(InvalidRange):
        heat_decay_oracle(3, 0, 1.5, 1.0)
    with pytest.raises(InvalidRange):
        heat_decay_oracle(3, 0, 0.5, 1.0)(-1.0)


def test_heat_flow_tracks_oracle_before_wraparound():
    g = make_grid(2, [64, 64], [200.0, 200.0])
    amp, kc = 1e-3, 1.0
    f = gen_powerlaw_field(g, 1.0, kc, seed=4, amplitude=amp, dealias_safe=False)
    o = heat_decay_oracle(2, 1, 1.0, kc, amplitude=amp, volume=g.volume, k_min=g.k_min)
    for t in (5.0, 20.0, 50.0):
        val = lambda_norm(g, heat_semigroup(g, f, t), 1)
        assert val == pytest.approx(o(t), rel=0.05)


# -- manufactured solutions ---------------------------------------------------------


@pytest.mark.parametrize("form", [PERTURBATION, CONSERVATIVE])
def test_equilibrium_forcing_is_zero(form):
    ms = ManufacturedSolution(2, 0, (0, 0), 1)
    g = make_grid(2, [8, 8], [TWO_PI, TWO_PI])
    f_rho, f_u, f_chi = mms_forcing(ms, ModelParams(), g, form)(0.7)
    assert np.max(np.abs(f_rho)) == 0 and np.max(np.abs(f_u)) == 0 and np.max(np.abs(f_chi)) == 0


def test_chi_decay_forcing_example():
    ms = builtin_mms("chi_decay", 1)
    g = make_grid(1, [32], [TWO_PI])
    (x,) = g.coords()
    forcing = mms_forcing(ms, ModelParams(), g)
    x_ = X[0]
    f_rho, f_u, f_chi = forcing.exprs
    assert sp.simplify(f_chi - (sp.exp(-3 * T) * sp.sin(x_) ** 3 - sp.exp(-T) * sp.sin(x_))) == 0
    assert sp.simplify(f_u[0] + sp.exp(-2 * T) * sp.sin(2 * x_) / 2) == 0
    assert f_rho == 0
    t = 0.4
    r, u, c = forcing(t)
    assert np.allclose(c, np.exp(-3 * t) * np.sin(x) ** 3 - np.exp(-t) * np.sin(x), atol=1e-15)
    assert np.allclose(u[0], -0.5 * np.exp(-2 * t) * np.sin(2 * x), atol=1e-15)


@pytest.mark.parametrize("case", ["chi_decay", "coupled"])
@pytest.mark.parametrize("form", [PERTURBATION, CONSERVATIVE])
def test_mms_residual_is_spectrally_small(case, form):
    ms = builtin_mms(case, 2)
    g = make_grid(2, [32, 32], [TWO_PI, TWO_PI])
    assert mms_residual(ms, ModelParams(), g, 0.3, form) <= 1e-10


def test_mms_vacuum_and_dimension_checks():
    g = make_grid(1, [16], [TWO_PI])
    ms = ManufacturedSolution(1, -0.9 + 0.05 * sp.sin(X[0]), (0,), 1)
    with pytest.raises(VacuumViolation):
        mms_forcing(ms, ModelParams(), g)
    with pytest.raises(InputError):
        mms_forcing(builtin_mms("coupled", 2), ModelParams(), g)
    with pytest.raises(InputError):
        builtin_mms("nope", 1)
    with pytest.raises(InputError):
        ManufacturedSolution(2, 0, (0,), 0)


def test_mms_short_run_converges():
    ms = builtin_mms("coupled", 1)
    g = make_grid(1, [32], [TWO_PI])
    p = ModelParams()
    forcing = mms_forcing(ms, p, g)
    errs = []
    for dt in (0.02, 0.01):
        res = run(ms.state(g, 0.0), StepperConfig(dt=dt, t_end=0.4, scheme="bdf2", blowup_ceiling=None), p, forcing=forcing)
        exact = ms.state(g, 0.4)
        errs.append(max(np.max(np.abs(a - b)) for a, b in zip(res.state.fields(), exact.fields())))
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.25)
