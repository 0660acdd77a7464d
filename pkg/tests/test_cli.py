import json
import os

import pytest

from damflow.cli import (EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK,
                         EXIT_SOLVER, EXIT_VALIDATION, main)

STATIONARY = """
[run]
mode = stationary

[geometry]
L = 1.0
K = 1.0

[grid]
nx = 16
ny = 16

[data]
phi = hydrostatic
k = 0.5

[penalty]
eps = 3e-2

[output]
dir = {out}
"""

UNSTEADY = """
[run]
mode = unsteady

[geometry]
L = 1.0
K = 1.0

[grid]
nx = 16
ny = 16

[physics]
alpha = 0.3

[data]
phi = barrier-lower
eps0 = 0.2
initial = stationary-lower

[penalty]
eps = 5e-2

[time]
T = 0.04
dt = 0.02

[output]
dir = {out}
"""


def _config(tmp_path, template, name="run.ini", outname="out"):
    path = tmp_path / name
    path.write_text(template.format(out=outname))
    return str(path), str(tmp_path / outname)


def test_validate_ok(tmp_path, capsys):
    cfg, _ = _config(tmp_path, STATIONARY)
    assert main(["validate", cfg]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["valid"] and report["mode"] == "stationary"


def test_validate_bad_config_exit_2(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[run]\nmode = nosuchmode\n")
    assert main(["validate", str(path)]) == EXIT_CONFIG


def test_validation_failure_exit_3(tmp_path):
    # negative compressibility passes parsing but fails object validation
    cfg, _ = _config(tmp_path, STATIONARY + "\n[physics]\nalpha = -1.0\n")
    assert main(["validate", cfg]) == EXIT_VALIDATION


def test_stationary_run_artifacts_and_determinism(tmp_path):
    cfg, out = _config(tmp_path, STATIONARY)
    assert main(["run", cfg]) == EXIT_OK
    assert os.path.exists(os.path.join(out, "solution.csv"))
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["complete"] and not summary["failures"]
    first = open(os.path.join(out, "solution.csv"), "rb").read()

    cfg2, out2 = _config(tmp_path, STATIONARY, name="run2.ini", outname="out2")
    assert main(["run", cfg2]) == EXIT_OK
    assert open(os.path.join(out2, "solution.csv"), "rb").read() == first


def test_unsteady_run_writes_snapshots(tmp_path):
    cfg, out = _config(tmp_path, UNSTEADY)
    assert main(["run", cfg]) == EXIT_OK
    traj = json.load(open(os.path.join(out, "trajectory.json")))
    assert len(traj["snapshots"]) == 3
    assert all(os.path.exists(os.path.join(out, s["file"])) for s in traj["snapshots"])
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["mass_balance_worst"] <= 1e-10


def test_out_override_and_env(tmp_path, monkeypatch):
    cfg, _ = _config(tmp_path, STATIONARY)
    override = tmp_path / "cli_out"
    assert main(["run", cfg, "--out", str(override)]) == EXIT_OK
    assert (override / "out" / "solution.csv").exists()

    env_root = tmp_path / "env_out"
    monkeypatch.setenv("DAMFLOW_OUT", str(env_root))
    cfg2, _ = _config(tmp_path, STATIONARY, name="run_env.ini")
    assert main(["run", cfg2]) == EXIT_OK
    assert (env_root / "out" / "solution.csv").exists()


def test_solver_failure_exit_4(tmp_path):
    # a penalty ramp far below the grid scale drives the time stepper into
    # undershoot that no dt halving cures
    text = UNSTEADY.replace("eps = 5e-2", "eps = 2e-3") \
                   .replace("initial = stationary-lower", "initial = midpoint")
    cfg, _ = _config(tmp_path, text)
    assert main(["run", cfg]) == EXIT_SOLVER


def test_compare_identical_runs_pass(tmp_path):
    cfg, out = _config(tmp_path, UNSTEADY)
    assert main(["run", cfg]) == EXIT_OK
    cfg2, out2 = _config(tmp_path, UNSTEADY, name="run2.ini", outname="out2")
    assert main(["run", cfg2]) == EXIT_OK
    report_path = str(tmp_path / "cmp.json")
    assert main(["compare", out, out2, "--out", report_path]) == EXIT_OK
    report = json.load(open(report_path))
    assert report["passed"]
    assert report["sign_min"] >= 0.0


def test_sweep_runs_each_value(tmp_path):
    cfg, out = _config(tmp_path, STATIONARY)
    assert main(["sweep", cfg, "--param", "penalty.eps",
                 "--values", "5e-2", "4e-2", "3e-2"]) == EXIT_OK
    summary = json.load(open(os.path.join(out, "sweep_summary.json")))
    assert [r["value"] for r in summary["results"]] == ["5e-2", "4e-2", "3e-2"]
    for r in summary["results"]:
        assert r["exit"] == EXIT_OK
        assert os.path.exists(os.path.join(r["dir"], "solution.csv"))


def test_sweep_bad_param_exit_2(tmp_path):
    cfg, _ = _config(tmp_path, STATIONARY)
    assert main(["sweep", cfg, "--param", "noseparator", "--values", "1"]) == EXIT_CONFIG
