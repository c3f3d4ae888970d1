import os

import numpy as np
import pytest

from malaria_age import report, solver
from malaria_age.cli import main
from malaria_age.config import parse_config

SIM = """
[params]
preset = table1
Lambda_v = 5e6
[grid]
da = 0.1
dt = 0.1
T = 3
[init]
I_v0 = [1e3, 1e5]
[output]
sample_every = 5
snapshot_times = [1.5]
"""

CONST = """
[params]
Lambda_h = 1000
Lambda_v = 5e4
mu_v = 10
mu_h = 0.2
delta = 0.05
r1 = 1.0
r2 = 0
beta_h = 1e-3
beta_v = 1e-3
[grid]
da = 0.2
dt = 0.2
T = 4
[init]
I_v0 = [100]
"""


def _listing(path):
    return sorted(os.listdir(path))


def test_simulate_bundle_and_manifest(tmp_path):
    b = report.execute(parse_config(SIM, "simulate"))
    assert b.ok
    assert {"run0.csv", "run1.csv", "results.txt", "config.ini", "figure_i.svg",
            "run0_snapshot_t1.5.csv"} <= set(b.files)
    files = report.write_bundle(b, tmp_path)
    assert sorted(files) == _listing(tmp_path) == sorted(report.read_manifest(tmp_path))
    header = b.files["run0.csv"].splitlines()[0]
    assert header.startswith("t [years],s_L1 [humans]")
    snap = b.files["run0_snapshot_t1.5.csv"].splitlines()
    assert snap[0] == "# t = 1.5" and any(line.startswith("# params_hash") for line in snap)


def test_csv_is_byte_identical_across_runs_and_threads(tmp_path):
    cfg = parse_config(SIM, "simulate")
    a = report.execute(cfg)
    b = report.execute(cfg, threads=2)
    for name in a.files:
        assert a.files[name] == b.files[name]


def test_csv_round_trips_floats():
    b = report.execute(parse_config(SIM, "simulate"))
    rows = [line.split(",") for line in b.files["run1.csv"].splitlines()[1:]]
    tr = b.trajectories["run1"]
    assert [float(r[5]) for r in rows] == list(tr["I_v"])


def test_rewrite_replaces_previous_outputs(tmp_path):
    report.write_bundle(report.execute(parse_config(SIM, "simulate")), tmp_path)
    report.write_bundle(report.execute(parse_config(CONST, "r0")), tmp_path)
    assert _listing(tmp_path) == sorted(report.read_manifest(tmp_path))
    (tmp_path / "stray.txt").write_text("x")
    with pytest.raises(FileExistsError):
        report.write_bundle(report.execute(parse_config(CONST, "r0")), tmp_path)


def test_sweep_r0_increasing():
    text = SIM + "[sweep]\nLambda_v = [1.5e6, 3e6, 5e6]\nsimulate = false\n"
    b = report.execute(parse_config(text, "sweep"))
    rows = [line.split(",") for line in b.files["sweep.csv"].splitlines()[1:]]
    r0 = [float(r[1]) for r in rows]
    assert r0[0] < r0[1] < r0[2]


def test_other_modes():
    eq = report.execute(parse_config(CONST, "equilibria")).results
    assert eq["endemic.exists"] and eq["endemic.residual"] < 1e-10
    st = report.execute(parse_config(CONST, "stability")).results
    assert st["stability.verdict"] == "LAS"
    cmp = report.execute(parse_config(CONST, "compare-ode"))
    assert cmp.ok and "compare.csv" in cmp.files
    tab = report.execute(parse_config(SIM.replace("Lambda_v = 5e6", "Lambda_v = 5e6\nr2 = 0"), "equilibria"))
    assert "endemic_profiles.csv" in tab.files
    pfe_stab = report.execute(parse_config(SIM, "stability")).results
    assert pfe_stab["pfe.verdict"] == "unstable"


def test_partial_failure_is_recorded(monkeypatch):
    real = solver.run

    def flaky(params, grid, init, **kw):
        if init.I_v > 1e4:
            raise ArithmeticError("boom")
        return real(params, grid, init, **kw)

    monkeypatch.setattr(solver, "run", flaky)
    b = report.execute(parse_config(SIM, "simulate"))
    assert not b.ok and "run0.csv" in b.files and "run1.csv" not in b.files
    assert "failures.txt" in b.files and b.results["run1.status"].startswith("failed")


def test_compare_requires_constant_parameters():
    b = report.execute(parse_config(SIM, "compare-ode"))
    assert not b.ok and "constant" in b.results["status.error"]


def test_cli_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(SIM)
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seedless",
                 "--threads", "2"]) == 0
    assert (tmp_path / "o" / "manifest.txt").exists()
    bad = tmp_path / "bad.ini"
    bad.write_text(SIM + "\n[grid]\n")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "p")]) == 2
    assert main(["r0", "--config", str(tmp_path / "missing.ini")]) == 2
    assert main(["compare-ode", "--config", str(cfg), "--out", str(tmp_path / "q")]) == 1


def test_cli_seedless_detects_rng_use(tmp_path, monkeypatch):
    real = report.execute

    def noisy(config, threads=1):
        np.random.random()
        return real(config, threads)

    monkeypatch.setattr(report, "execute", noisy)
    cfg = tmp_path / "c.ini"
    cfg.write_text(CONST)
    assert main(["r0", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seedless"]) == 3
