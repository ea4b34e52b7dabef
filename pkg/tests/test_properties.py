"""Randomized property tests (hypothesis) across grid shapes and parameters."""

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from nsac import _kernels
from nsac.checkpoint import load, save
from nsac.diagnostics import fit_decay
from nsac.grid import make_grid, random_field
from nsac.integrators import LinearBlocks, amplification_radius
from nsac.model import ModelParams, State, coefficients
from nsac.norms import interpolation_check

SETTINGS = settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])


@st.composite
def grids(draw, max_dim=3):
    dim = draw(st.integers(1, max_dim))
    sizes = [draw(st.sampled_from([8, 10, 12, 16])) for _ in range(dim)]
    lengths = [draw(st.floats(0.5, 50.0)) for _ in range(dim)]
    return make_grid(dim, sizes, lengths)


@SETTINGS
@given(grids(), st.integers(0, 2**32 - 1))
def test_parseval_and_roundtrip(g, seed):
    f = np.random.default_rng(seed).standard_normal(g.shape)
    c = g.forward(f)
    assert g.l2sq(c) == pytest.approx(np.sum(f**2) * g.cell_volume, rel=1e-11)
    assert np.max(np.abs(g.inverse(c) - f)) <= 1e-12 * max(1.0, np.max(np.abs(f)))


@SETTINGS
@given(grids(), st.integers(0, 2**32 - 1), st.sampled_from([0, 1, 2]), st.sampled_from([1, 2]),
       st.sampled_from([0.5, 1.0, 1.25]))
def test_interpolation_lemma(g, seed, l, k, s):
    f = random_field(g, np.random.default_rng(seed))
    _, _, ratio = interpolation_check(g, f, l, k, s)
    assert ratio <= 1 + 1e-10


@SETTINGS
@given(st.lists(st.floats(-0.7, 5.0), min_size=1, max_size=40), st.floats(1.05, 4.0), st.floats(0.1, 3.0))
def test_closure_identities(values, gamma, a):
    p = ModelParams(gamma=gamma, pressure_scale=a, vacuum_floor=0.25)
    r = np.array(values)
    c = coefficients(r, p)
    assert np.allclose(c["h"] + c["phi"], 1.0, rtol=0, atol=1e-12)
    assert np.allclose(c["varphi"], 1 - c["phi"] ** 2, rtol=0, atol=1e-12)
    assert np.allclose(c["g"], a * gamma * (1 + r) ** (gamma - 2) - 1, rtol=1e-12, atol=1e-12)
    for mod in _kernels.available_backends().values():
        h, g_, phi, varphi, lo = mod.closures(r, p.sound_speed_sq, gamma)
        assert np.allclose(h, c["h"], rtol=1e-14, atol=0) and lo == np.min(1 + r)


@SETTINGS
@given(grids(max_dim=2), st.floats(1e-4, 1e3), st.floats(0.05, 3.0), st.floats(-0.5, 3.0), st.floats(0.3, 4.0))
def test_unconditional_stability(g, dt, mu, lam_frac, c2):
    p = ModelParams(mu=mu, lam=lam_frac * mu)
    blocks = LinearBlocks(g, p, dt, sound_speed_sq=c2)
    assert np.max(amplification_radius(blocks)) <= 1 + 1e-10


@SETTINGS
@given(grids(), st.integers(0, 2**32 - 1), st.floats(0, 1e6), st.integers(0, 10**9))
def test_checkpoint_roundtrip(tmp_path, g, seed, t, step):
    rng = np.random.default_rng(seed)
    s = State(g, rng.standard_normal(g.shape), rng.standard_normal((g.dim,) + g.shape),
              rng.standard_normal(g.shape), t=t, step=step)
    path = tmp_path / "p.nsac"
    save(s, path, ModelParams())
    back = load(path).state
    assert back.t == t and back.step == step and back.grid == g
    for a, b in zip(back.fields(), s.fields()):
        assert np.array_equal(a, b)


@SETTINGS
@given(st.floats(-2.0, 1.0), st.floats(1e-3, 1e3), st.integers(10, 60))
def test_fit_recovers_exponent_and_is_scale_invariant(alpha, scale, n):
    t = np.linspace(0.0, 100.0, n)
    v = (1 + t) ** alpha
    a = fit_decay(t, v)
    b = fit_decay(t, scale * v)
    assert a.exponent == pytest.approx(alpha, abs=1e-10)
    assert b.exponent == pytest.approx(a.exponent, abs=1e-10)
