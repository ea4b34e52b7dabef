import json
import subprocess
import sys

import numpy as np
import pytest

from nsac import cli
from nsac.config import parse_config
from nsac.diagnostics import DiagnosticsRecord
from nsac.errors import CflViolation, FormatError, ParseError, ValidationError, VacuumViolation
from nsac.runner import (
    CSV_NAME,
    MANIFEST_NAME,
    build_initial,
    compare_forms,
    exit_code_for,
    read_csv,
    refit_csv,
    resume_experiment,
    run_experiment,
    write_csv,
)

EQUILIBRIUM = """
schema_version: 1
grid: {dim: 2, sizes: 16}
stepper: {dt: 0.05, t_end: 1.0}
initial: {kind: equilibrium, chi: 1.0}
diagnostics: {norms: ["L2:u", "L2:rho", "Hneg0.5:chi"], energies: [{l: 0, m: 3}], cadence: 2}
"""

SMALL = """
schema_version: 1
grid: {{dim: 2, sizes: 16, lengths: 20}}
stepper: {{scheme: {scheme}, dt: 0.05, t_end: 2.0}}
initial: {{kind: random, seed: 3, amplitude: 1.0e-3, chi_background: 1.0, band: 2}}
diagnostics: {{norms: ["L2:u", "Hneg0.5:u"], cadence: 2}}
output: {{checkpoint_times: [1.0]}}
fits: [{{norm: "L2:u", window: [0.2, 2.0]}}]
"""


def write(tmp_path, text, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_exit_codes():
    assert exit_code_for(None) == 0
    assert exit_code_for(ValidationError("x")) == 2
    assert exit_code_for(ParseError("x")) == 2
    assert exit_code_for(CflViolation("x")) == 3
    assert exit_code_for(VacuumViolation("x")) == 3
    assert exit_code_for(FormatError("x")) == 4
    assert exit_code_for(OSError("x")) == 4


def test_csv_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(0)
    cols = ["a", "b", "min_rho", "max_rho"]
    recs = [
        DiagnosticsRecord(float(t), {"a": float(rng.random()), "b": float(rng.random() * 1e-300)},
                          float(rng.random()), float(rng.random()))
        for t in np.linspace(0, 1, 7) / 3
    ]
    write_csv(tmp_path / "x.csv", cols, recs)
    header, data = read_csv(tmp_path / "x.csv")
    assert header == ["t", *cols]
    for i, r in enumerate(recs):
        assert data["t"][i] == r.t
        for c in cols:
            assert data[c][i] == r[c]


def test_equilibrium_run(tmp_path):
    cfg = parse_config(EQUILIBRIUM)
    out = run_experiment(cfg, tmp_path / "eq")
    assert out.exit_code == 0 and out.status == "ok"
    header, data = read_csv(tmp_path / "eq" / CSV_NAME)
    assert header[:3] == ["t", "sqrtE3", "L2:u"]
    assert header[-2:] == ["min_rho", "max_rho"]
    assert len(data["t"]) == 11
    for c in header[1:]:
        assert np.max(np.abs(data[c] - data[c][0])) <= 1e-12
    manifest = json.loads((tmp_path / "eq" / MANIFEST_NAME).read_text())
    assert manifest["status"] == "ok" and manifest["config"]["model"]["ell"] == 1.0
    assert manifest["invariants"]["mean_rho_drift"] == 0.0


def test_runs_are_byte_identical(tmp_path):
    cfg = parse_config(SMALL.format(scheme="bdf2"))
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    assert (tmp_path / "a" / CSV_NAME).read_bytes() == (tmp_path / "b" / CSV_NAME).read_bytes()
    assert (tmp_path / "a" / "checkpoint_00000020.nsac").read_bytes() == (
        tmp_path / "b" / "checkpoint_00000020.nsac"
    ).read_bytes()


@pytest.mark.parametrize("scheme", ["euler", "bdf2"])
def test_resume_is_bit_exact(tmp_path, scheme):
    cfg = parse_config(SMALL.format(scheme=scheme))
    full = run_experiment(cfg, tmp_path / "full")
    assert full.exit_code == 0
    manifest = full.manifest
    assert manifest["fits"][0]["norm"] == "L2:u" and "exponent" in manifest["fits"][0]
    res = resume_experiment(cfg, tmp_path / "full" / "checkpoint_00000020.nsac", tmp_path / "res")
    assert res.exit_code == 0
    for a, b in zip(full.state.fields(), res.state.fields()):
        assert np.array_equal(a, b)
    last_full = (tmp_path / "full" / CSV_NAME).read_text().splitlines()[-1]
    last_res = (tmp_path / "res" / CSV_NAME).read_text().splitlines()[-1]
    assert last_full == last_res


def test_resume_rejects_bad_checkpoint(tmp_path):
    cfg = parse_config(SMALL.format(scheme="euler"))
    (tmp_path / "bad.nsac").write_bytes(b"nope")
    out = resume_experiment(cfg, tmp_path / "bad.nsac", tmp_path / "r")
    assert out.exit_code == 4 and out.status == "FormatError"
    assert json.loads((tmp_path / "r" / MANIFEST_NAME).read_text())["status"] == "FormatError"
    out = resume_experiment(cfg, tmp_path / "missing.nsac", tmp_path / "r2")
    assert out.exit_code == 4 and out.status == "Io"


def test_manifest_written_on_failure(tmp_path):
    text = EQUILIBRIUM.replace("kind: equilibrium, chi: 1.0", "kind: random, seed: 1, amplitude: 0.9") \
        .replace("dt: 0.05", "dt: 2.0").replace("t_end: 1.0", "t_end: 20.0")
    cfg = parse_config(text)
    out = run_experiment(cfg, tmp_path / "f")
    assert out.exit_code == 3
    manifest = json.loads((tmp_path / "f" / MANIFEST_NAME).read_text())
    assert manifest["status"] in ("CflViolation", "NonFiniteData", "VacuumViolation")
    assert manifest["exit_code"] == 3
    assert (tmp_path / "f" / CSV_NAME).exists()


def test_build_initial_recipes():
    cfg = parse_config(SMALL.format(scheme="euler"))
    s = build_initial(cfg)
    assert np.mean(s.chi) == pytest.approx(1.0)
    assert np.max(np.abs(s.u)) == pytest.approx(1e-3)
    text = EQUILIBRIUM.replace("kind: equilibrium, chi: 1.0",
                               "kind: powerlaw, seed: 2, s: 1.0, k_cut: 3, fields: [u], sqrt_energy: 0.01")
    from nsac.model import sqrt_energy

    s = build_initial(parse_config(text))
    assert sqrt_energy(s) == pytest.approx(0.01)
    assert np.all(s.rho == 0) and np.all(s.chi == 0)
    bump = parse_config(EQUILIBRIUM.replace("kind: equilibrium, chi: 1.0", "kind: bump, amplitude: 1.0e-4"))
    s = build_initial(bump)
    assert np.max(s.chi) == pytest.approx(1 + 1e-4) and np.all(s.u == 0)
    cons = parse_config(EQUILIBRIUM + "formulation: conservative\n")
    assert build_initial(cons).formulation == "conservative"


def test_compare_forms_equilibrium_and_bump(tmp_path):
    rep = compare_forms(parse_config(EQUILIBRIUM), tmp_path)
    assert max(rep["sup_rho"], rep["sup_u"], rep["sup_chi"]) <= 1e-13
    assert (tmp_path / "compare_forms.json").exists()
    text = EQUILIBRIUM.replace("kind: equilibrium, chi: 1.0", "kind: bump, amplitude: 1.0e-3") \
        .replace("dt: 0.05, t_end: 1.0", "dt: 0.01, t_end: 0.2")
    rep = compare_forms(parse_config(text))
    assert 0 < max(rep["sup_rho"], rep["sup_u"], rep["sup_chi"]) <= 1e-6


def test_compare_forms_requires_small_data():
    text = EQUILIBRIUM.replace("kind: equilibrium, chi: 1.0", "kind: random, seed: 1, amplitude: 0.5")
    with pytest.raises(ValidationError):
        compare_forms(parse_config(text))


def test_refit_csv(tmp_path):
    t = np.linspace(0, 20, 21)
    recs = [DiagnosticsRecord(float(x), {"n": float((1 + x) ** -0.5)}) for x in t]
    write_csv(tmp_path / "d.csv", ["n", "min_rho", "max_rho"], recs)
    (fit,) = refit_csv(tmp_path / "d.csv")
    assert fit.exponent == pytest.approx(-0.5, abs=1e-12)
    (fit,) = refit_csv(tmp_path / "d.csv", ["n"], (5, 20))
    assert fit.samples == 16


# -- CLI -----------------------------------------------------------------------------


def test_cli_run_and_decay_fit(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(scheme="euler"))
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["status"] == "ok" and summary["steps"] == 40
    code = cli.main(["decay-fit", str(tmp_path / "o" / CSV_NAME), "--norm", "L2:u", "--window", "0.2", "2"])
    assert code == 0
    fits = json.loads(capsys.readouterr().out)
    assert fits[0]["norm"] == "L2:u"


def test_cli_resume(tmp_path, capsys):
    cfg = write(tmp_path, SMALL.format(scheme="bdf2"))
    assert cli.main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 0
    ck = tmp_path / "o" / "checkpoint_00000020.nsac"
    assert cli.main(["resume", str(ck), "--config", str(cfg), "--out", str(tmp_path / "r"), "--t-end", "2.0"]) == 0
    a = (tmp_path / "o" / CSV_NAME).read_text().splitlines()[-1]
    b = (tmp_path / "r" / CSV_NAME).read_text().splitlines()[-1]
    assert a == b


def test_cli_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, "schema_version: 1\ngrid: {dim: 2, sizes: 16}\nmodel: {mu: -1}\n", "bad.yaml")
    assert cli.main(["run", str(bad)]) == 2
    assert "μ > 0" in capsys.readouterr().err
    assert cli.main(["run", str(tmp_path / "nope.yaml")]) == 4
    assert cli.main(["decay-fit", str(tmp_path / "nope.csv")]) == 4
    fail = EQUILIBRIUM.replace("kind: equilibrium, chi: 1.0", "kind: random, seed: 1, amplitude: 0.9") \
        .replace("dt: 0.05", "dt: 2.0").replace("t_end: 1.0", "t_end: 20.0")
    assert cli.main(["run", str(write(tmp_path, fail, "f.yaml")), "--out", str(tmp_path / "f")]) == 3


def test_cli_compare_forms(tmp_path, capsys):
    text = EQUILIBRIUM.replace("kind: equilibrium, chi: 1.0", "kind: bump, amplitude: 1.0e-3") \
        .replace("dt: 0.05, t_end: 1.0", "dt: 0.01, t_end: 0.1")
    cfg = write(tmp_path, text)
    assert cli.main(["compare-forms", str(cfg), "--tolerance", "1e-6"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert "series" not in rep and rep["sup_chi"] <= 1e-6
    assert cli.main(["compare-forms", str(cfg), "--tolerance", "1e-30"]) == 3


def test_cli_mms(capsys):
    assert cli.main(["mms", "--case", "chi_decay", "--n", "16", "--dt", "0.05", "--t-end", "0.5"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["slope"] == pytest.approx(1.0, abs=0.2)
    assert rep["spatial_residual"] < 1e-10


def test_cli_inequality_lab(tmp_path, capsys):
    out = tmp_path / "gn.json"
    code = cli.main(["inequality-lab", "GN", "--trials", "3", "--dim", "2", "--n", "16", "--set", "l=2",
                     "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["id"] == "GN" and rep["trials"] == 3
    capsys.readouterr()
    assert cli.main(["inequality-lab", "GN", "--set", "oops"]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "nsac", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("run", "compare-forms", "decay-fit", "mms", "inequality-lab", "resume"):
        assert sub in proc.stdout
