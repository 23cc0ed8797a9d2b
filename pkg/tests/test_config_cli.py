import csv

import numpy as np
import pytest

from qres import cli
from qres import config as cfgmod

DIMER = "model:\n  kind: dimer\n  dimer: {delta: %s, J: 100, gamma_phi: %s, gamma_D: 5, gamma_A: 5}\n"


def write(tmp_path, text, name="c.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_rows(path):
    with open(path) as f:
        return list(csv.reader(f))


def test_unknown_key_is_config_error(tmp_path, capsys):
    with pytest.raises(cfgmod.ConfigError, match="colour"):
        cfgmod.from_dict({"run": {"colour": 1}})
    path = write(tmp_path, "run: {colour: 1}\n")
    assert cli.main(["check-config", "--config", path]) == cli.EXIT_CONFIG
    assert "colour" in capsys.readouterr().err


def test_yaml_error_reports_position(tmp_path):
    path = write(tmp_path, "run:\n  t1: [0,\n")
    with pytest.raises(cfgmod.ConfigError, match=r"c\.yaml:\d+:\d+"):
        cfgmod.load(path)


def test_invalid_physics_is_config_error(tmp_path):
    path = write(tmp_path, DIMER % (0, -1))
    assert cli.main(["check-config", "--config", path]) == cli.EXIT_CONFIG


def test_check_config_ok(tmp_path, capsys):
    path = write(tmp_path, DIMER % (130, 0))
    assert cli.main(["check-config", "--config", path]) == cli.EXIT_OK
    assert "ok (model dimer" in capsys.readouterr().out


def test_sweep_theta_is_deterministic(tmp_path, monkeypatch):
    path = write(tmp_path, DIMER % (130, 0))
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["sweep-theta", "--config", path, "--out", str(a)]) == cli.EXIT_OK
    monkeypatch.setenv("QRES_THREADS", "3")
    assert cli.main(["sweep-theta", "--config", path, "--out", str(b)]) == cli.EXIT_OK
    ta, tb = (a / "sweep_theta.csv").read_bytes(), (b / "sweep_theta.csv").read_bytes()
    assert ta == tb
    rows = read_rows(a / "sweep_theta.csv")
    assert len(rows) == 182
    assert max(float(r[3]) for r in rows[1:]) < 1e-10


def test_threads_env_parsing(monkeypatch):
    monkeypatch.setenv("QRES_THREADS", "4")
    assert cli.workers() == 4
    monkeypatch.setenv("QRES_THREADS", "zero")
    assert cli.workers() == 1
    monkeypatch.setenv("QRES_THREADS", "-2")
    assert cli.workers() == 1


def test_dynamics_writes_consistent_chain(tmp_path):
    path = write(tmp_path, DIMER % (0, 50) + "run: {t2: 0.2, n_grid: 30}\n")
    assert cli.main(["dynamics", "--config", path, "--out", str(tmp_path)]) == cli.EXIT_OK
    rows = read_rows(tmp_path / "dynamics.csv")
    assert rows[0] == ["t", "capacity", "gamma", "variation_integral", "uniform_bound", "analytic_bound", "regime"]
    data = np.array([[float(x) for x in r[:6]] for r in rows[1:]])
    assert len(data) == 30 and all(r[6] == "underdamped" for r in rows[1:])
    assert np.all(data[:, 3] <= data[:, 4] + 1e-9) and np.all(data[:, 3] <= data[:, 5] + 1e-8)


def test_bounds_regime_mismatch_exit_code(tmp_path):
    path = write(tmp_path, DIMER % (130, 50) + "run: {t2: 0.2, n_grid: 20, analytic: true}\n")
    assert cli.main(["bounds", "--config", path, "--out", str(tmp_path)]) == cli.EXIT_REGIME


def test_bounds_infeasible_target(tmp_path, capsys):
    path = write(tmp_path, DIMER % (0, 0) + "run: {t2: 0.2, n_grid: 20, target: 100.0}\n")
    assert cli.main(["bounds", "--config", path, "--out", str(tmp_path)]) == cli.EXIT_OK
    assert capsys.readouterr().out.startswith("infeasible")
    summary = dict(read_rows(tmp_path / "bounds_summary.csv")[1:])
    assert summary["verdict"] == "infeasible" and float(summary["min_time"]) > 0.2
    assert summary["analytic_min_time"] == "inf"


def test_verify_detects_broken_kraus(tmp_path):
    path = write(tmp_path, "verify: {samples: 10, inject_broken_kraus: true}\n")
    assert cli.main(["verify", "--config", path, "--out", str(tmp_path)]) == cli.EXIT_INVARIANT
    assert "FAIL  Kraus completeness" in (tmp_path / "verify.txt").read_text()


def test_decompose_rabi_and_pauli_decay(tmp_path, capsys):
    rabi = write(tmp_path, "model: {kind: rabi, rabi: {omega: 1.9}}\nmap: {kind: dephasing, dim: 2}\n"
                           "observable: {matrix: {re: [[1, 0], [0, 0]]}}\nrun: {t2: 1}\n", "r.yaml")
    assert cli.main(["decompose", "--config", rabi, "--out", str(tmp_path / "r")]) == cli.EXIT_OK
    assert "compatibility: incompatible" in capsys.readouterr().out
    pd = write(tmp_path, "model: {kind: pauli_decay, pauli_decay: {gx: 0.3, gy: 0.9, gz: 1.7}}\n"
                         "map: {kind: dephasing, dim: 2}\nobservable: {matrix: {re: [[1, 0], [0, 0]]}}\n"
                         "run: {t2: 1}\n", "p.yaml")
    assert cli.main(["decompose", "--config", pd, "--out", str(tmp_path / "p")]) == cli.EXIT_OK
    assert "compatibility: compatible" in capsys.readouterr().out


def test_hypothesis_command(tmp_path):
    path = write(tmp_path, "model:\n  kind: dimer\n  dimer: {theta: 0.7853981633974483}\n"
                           "run: {n_values: [1, 10], trials: 2000, seed: 3}\n")
    assert cli.main(["hypothesis", "--config", path, "--out", str(tmp_path)]) == cli.EXIT_OK
    rows = read_rows(tmp_path / "hypothesis.csv")
    assert [r[0] for r in rows[1:]] == ["1", "10"]
    assert float(rows[1][3]) == pytest.approx(0.75)
