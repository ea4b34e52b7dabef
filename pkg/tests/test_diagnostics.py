import numpy as np
import pytest

from nsac.diagnostics import DecayFit, DiagnosticsPlan, EnergySpec, default_window, fit_decay, record
from nsac.errors import DegenerateSeries, InputError, InvalidRange, NonFiniteData
from nsac.grid import make_grid
from nsac.model import ModelParams, State, energy_functional, sqrt_energy

TWO_PI = 2 * np.pi
PLAN = DiagnosticsPlan(
    norms=("L2:rho", "L2:u", "Linf:chi", "H2:chi", "Hneg0.5:u", "Hneg1:rho", "grad1:chi"),
    energies=({"l": 0, "m": 3, "eta": 0.5}, EnergySpec(1, 3, 0.25)),
    physical_energy=True,
)


@pytest.fixture
def g1():
    return make_grid(1, [32], [TWO_PI])


def test_columns_layout():
    cols = PLAN.columns()
    assert cols[0] == "sqrtE3"
    assert cols[-2:] == ["min_rho", "max_rho"]
    assert "mean:u" in cols and "mean:rho" in cols
    assert cols.index("E0_3@0.5") < cols.index("F")
    assert EnergySpec(1, 3, 0.25).id == "E1_3@0.25"


def test_zero_state_record(g1):
    rec = record(State.zeros(g1), PLAN, ModelParams())
    for c in PLAN.columns():
        if c in ("min_rho", "max_rho"):
            assert rec[c] == 1.0
        elif c == "F":
            assert rec[c] > 0  # chi = 0 sits on top of the double well
        else:
            assert rec[c] == 0.0, c


def test_single_mode_density(g1):
    (x,) = g1.coords()
    s = State(g1, np.sin(x), np.zeros((1, 32)), np.zeros(32))
    rec = record(s, DiagnosticsPlan(norms=("L2:rho",)))
    assert rec["L2:rho"] == pytest.approx(np.sqrt(np.pi))
    assert rec.min_rho == pytest.approx(0.0, abs=1e-2) and rec.max_rho == pytest.approx(2.0, abs=1e-2)


def test_record_matches_model_and_is_order_independent(g1):
    (x,) = g1.coords()
    s = State(g1, 0.1 * np.sin(x), 0.05 * np.cos(2 * x)[None], 1 + 0.02 * np.sin(3 * x), t=0.5)
    plan = DiagnosticsPlan(norms=PLAN.norms, energies=PLAN.energies, chi_ref=1.0)
    rev = DiagnosticsPlan(norms=PLAN.norms[::-1], energies=PLAN.energies[::-1], chi_ref=1.0)
    a, b = record(s, plan), record(s, rev)
    assert set(a.values) == set(b.values)
    for k in a.values:
        assert a[k] == b[k]
    assert a.t == 0.5
    shifted = State(g1, s.rho, s.u, s.chi - 1)
    assert a["sqrtE3"] == pytest.approx(sqrt_energy(shifted, 3))
    assert a["E0_3@0.5"] == pytest.approx(energy_functional(shifted, 0, 3, 0.5))
    assert a["mean:rho"] == pytest.approx(0.0, abs=1e-15)


def test_record_row_and_physical_energy_needs_params(g1):
    s = State.zeros(g1)
    rec = record(s, PLAN, ModelParams())
    row = rec.row(PLAN.columns())
    assert len(row) == len(PLAN.columns()) + 1 and row[0] == 0.0
    with pytest.raises(InputError):
        record(s, PLAN)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_state_rejected(g1):
    s = State.zeros(g1)
    s.chi[3] = np.inf
    with pytest.raises(NonFiniteData):
        record(s, DiagnosticsPlan(norms=("L2:chi",)))


def test_plan_validation():
    with pytest.raises(InvalidRange):
        EnergySpec(3, 1)
    with pytest.raises(InvalidRange):
        EnergySpec(0, 3, 1.0)
    with pytest.raises(InputError):
        DiagnosticsPlan(cadence=0)
    with pytest.raises(InputError):
        DiagnosticsPlan(norms=("bogus",))


# -- fits ----------------------------------------------------------------------------


def test_fit_exact_power_law():
    t = np.linspace(0, 50, 60)
    fit = fit_decay(t, (1 + t) ** -0.75)
    assert fit.exponent == pytest.approx(-0.75, abs=1e-12)
    assert fit.stderr < 1e-12 and fit.r2 == pytest.approx(1.0)
    assert fit.samples == 60


def test_fit_constant_series():
    t = np.arange(20.0)
    fit = fit_decay(t, np.full(20, 4.0))
    assert fit.exponent == pytest.approx(0.0, abs=1e-14)
    assert fit.r2 == 1.0


def test_fit_prefactor_invariance():
    t = np.linspace(1, 30, 40)
    rng = np.random.default_rng(0)
    v = (1 + t) ** -1.0 * np.exp(0.01 * rng.standard_normal(40))
    a = fit_decay(t, v, (2, 25))
    b = fit_decay(t, 3 * v, (2, 25))
    assert a.exponent == pytest.approx(b.exponent, abs=1e-13)
    assert fit_decay(t, 3 * (1 + t) ** -1.0).exponent == pytest.approx(-1.0, abs=1e-12)


def test_fit_window_selection_and_dict():
    t = np.linspace(0, 100, 101)
    v = np.where(t < 10, 1.0, (1 + t) ** -0.5)
    fit = fit_decay(t, v, (10, 100), norm="L2:u")
    assert fit.exponent == pytest.approx(-0.5, abs=1e-12)
    d = fit.to_dict()
    assert d["norm"] == "L2:u" and d["window"] == [10.0, 100.0] and d["samples"] == 91
    assert isinstance(fit, DecayFit)


@pytest.mark.parametrize(
    "times,values,window",
    [
        (np.arange(5.0), np.ones(5), None),
        (np.arange(20.0), -np.ones(20), None),
        (np.arange(20.0), np.r_[np.ones(19), 0.0], None),
        (np.r_[np.arange(19.0), 5.0], np.ones(20), None),
        (np.arange(20.0), np.ones(20), (5, 5)),
        (np.arange(20.0), np.ones(20), (0, 5)),
        (np.arange(20.0), np.ones(19), None),
    ],
)
def test_fit_degenerate(times, values, window):
    with pytest.raises(DegenerateSeries):
        fit_decay(times, values, window)


def test_default_window():
    g = make_grid(3, [8] * 3, [200.0] * 3)
    t0, t1 = default_window(g)
    assert t0 == 5.0 and t1 == 100.0
    g = make_grid(1, [8], [TWO_PI])
    assert default_window(g) == (5.0, pytest.approx(0.1))
