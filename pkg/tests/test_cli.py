import csv
import json
import subprocess
import sys

import pytest

from dlmg import cli
from dlmg import hp_analytic as hp


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def run_cmd(tmp_path, command, cfg, out="out"):
    code = cli.main([command, "--config", str(write_config(tmp_path, cfg)), "--out", str(tmp_path / out)])
    manifest = json.loads((tmp_path / out / "manifest.json").read_text())
    return code, manifest


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


SMALL = {"S": 4, "coupling": 0.5, "gamma": 0.2, "T": 4.0}


def test_spectrum_csv_schema_and_determinism(tmp_path):
    code, manifest = run_cmd(tmp_path, "spectrum", SMALL, "a")
    assert code == 0 and manifest["status"] == "ok"
    run_cmd(tmp_path, "spectrum", SMALL, "b")
    a = (tmp_path / "a" / "spectrum.csv").read_bytes()
    assert a == (tmp_path / "b" / "spectrum.csv").read_bytes()
    assert b"\r" not in a
    rows = read_csv(tmp_path / "a" / "spectrum.csv")
    assert rows[0] == ["re", "im", "sector", "pair_id"]
    assert {r[2] for r in rows[1:]} <= {"1", "-1"}
    # 17 significant digits
    assert float(rows[1][0]) == pytest.approx(0.0, abs=1e-8)


def test_spectrum_multiple_couplings(tmp_path):
    cfg = {**SMALL, "couplings": [0.5, 2.0], "K": 6}
    code, manifest = run_cmd(tmp_path, "spectrum", cfg)
    assert code == 0
    assert manifest["files"] == ["spectrum_0.csv", "spectrum_1.csv"]


def test_gap_scan(tmp_path):
    cfg = {"S": 10, "gamma": 0.05, "T": 4.0, "couplings": [0.5, 2.0], "K": 10}
    code, _ = run_cmd(tmp_path, "gap-scan", cfg)
    assert code == 0
    rows = read_csv(tmp_path / "out" / "gap_scan.csv")
    assert rows[0] == ["lambda_coupling", "re_lp1", "re_lm0", "im_lm0"]
    assert len(rows) == 3


def test_stationary(tmp_path):
    code, manifest = run_cmd(tmp_path, "stationary", {**SMALL, "coupling": 2.0, "S": 6})
    assert code == 0
    rows = read_csv(tmp_path / "out" / "stationary.csv")
    assert rows[0] == ["sx", "weight", "weight_broken"]
    assert sum(float(r[1]) for r in rows[1:]) == pytest.approx(1.0)
    assert "gibbs_fit_temperature" in manifest["summary"]


def test_dynamics_with_analytic(tmp_path):
    cfg = {**SMALL, "coupling": 0.1, "S": 6, "kind": "rotated_ground", "theta": 0.2, "t_max": 2.0, "n_t": 11}
    code, manifest = run_cmd(tmp_path, "dynamics", cfg)
    assert code == 0
    dyn = read_csv(tmp_path / "out" / "dynamics.csv")
    ana = read_csv(tmp_path / "out" / "analytic.csv")
    assert dyn[0] == ["t", "sx", "sy", "sz", "energy", "trace_err", "min_eig"]
    assert ana[0] == ["t", "mx", "my", "mz", "energy", "energy_no_fs", "T_S"]
    assert [r[0] for r in dyn[1:]] == [r[0] for r in ana[1:]]
    assert all(inv["passed"] for inv in manifest["invariants"])


def test_dynamics_two_trajectories(tmp_path):
    cfg = {"S": 6, "gamma": 0.64, "T": 5.0, "coupling": 3.2, "theta_offsets": [0.0, 0.3141592653589793],
           "t_max": 1.0, "n_t": 5}
    code, manifest = run_cmd(tmp_path, "dynamics", cfg)
    assert code == 0
    assert manifest["files"] == ["dynamics_0.csv", "dynamics_1.csv"]


def test_analytic(tmp_path):
    code, manifest = run_cmd(tmp_path, "analytic", {"S": 150, "coupling": 0.1, "gamma": 0.15, "T": 4.0, "n_t": 5})
    assert code == 0
    assert manifest["summary"]["omega_b"] == pytest.approx(hp.mode_frequency(0.1))


def test_oracle(tmp_path):
    code, manifest = run_cmd(tmp_path, "oracle", {"coupling": 0.1, "gamma": 0.3, "T": 4.0, "n_max": 60})
    assert code == 0
    assert manifest["summary"]["n_mean"] == pytest.approx(manifest["summary"]["z12"], abs=1e-3)


def test_audit_default_passes(tmp_path, capsys):
    code, manifest = run_cmd(tmp_path, "audit", {})
    assert code == 0
    out = capsys.readouterr().out
    assert "[FAIL]" not in out and out.count("[PASS]") == len(manifest["invariants"])
    assert read_csv(tmp_path / "out" / "audit.csv")[0] == ["check", "status", "residual", "tolerance"]


def test_audit_critical_point_skips(tmp_path, capsys):
    code, manifest = run_cmd(tmp_path, "audit", {"coupling": 1.0})
    assert code == 0
    assert "critical point" in capsys.readouterr().out
    assert any(inv["passed"] is None for inv in manifest["invariants"])


def test_audit_detects_sign_error(tmp_path, monkeypatch):
    original = hp.jump_coefficients

    def flipped(m_z, omega_b, T):
        bp, bm = original(m_z, omega_b, T)
        return -bm, bp  # wrong sign and swapped roles

    monkeypatch.setattr(hp, "jump_coefficients", flipped)
    code, manifest = run_cmd(tmp_path, "audit", {})
    assert code == 2
    failed = {inv["name"] for inv in manifest["invariants"] if inv["passed"] is False}
    assert "B_-^2 - B_+^2 = m_z" in failed


def test_missing_key_writes_manifest(tmp_path):
    code, manifest = run_cmd(tmp_path, "spectrum", {"S": 4})
    assert code == 1
    assert manifest["status"] == "error" and "coupling" in manifest["error"]


def test_invalid_parameter_exit_code(tmp_path):
    code, manifest = run_cmd(tmp_path, "stationary", {**SMALL, "T": -1.0})
    assert code == 1
    assert "temperature" in manifest["error"]


def test_unreadable_config(tmp_path):
    code = cli.main(["spectrum", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")])
    assert code == 1
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["status"] == "error"


def test_command_mismatch(tmp_path):
    code, manifest = run_cmd(tmp_path, "spectrum", {**SMALL, "command": "dynamics"})
    assert code == 1


def test_usage_error():
    assert cli.main(["nonsense", "--config", "x.json"]) == 1


def test_console_script(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    proc = subprocess.run(
        [sys.executable, "-m", "dlmg.cli", "spectrum", "--config", str(cfg), "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "spectrum.csv").exists()
