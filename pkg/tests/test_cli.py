from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest
from oracles import FIXTURES

from nlsvar.cli import run
from nlsvar.fileio import read_csv

LIN = str(FIXTURES / "ex_linear.json")
THR = str(FIXTURES / "ex_threshold.json")


def _csv(path):
    return read_csv(path)


def test_check_prints_report(capsys):
    assert run(["check", "--model", THR]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["verdict"] == "member" and rep["r"] == 1


def test_check_non_member_exits_one(tmp_path, capsys):
    doc = json.loads((FIXTURES / "ex_linear.json").read_text())
    doc["family"]["phi"][1] = [[-1.0, 2.0], [0.0, 1.0]]  # 1 + beta'alpha = -1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert run(["check", "--model", str(path)]) == 1
    assert json.loads(capsys.readouterr().out)["verdict"] == "not_member"


def test_input_errors_exit_two(tmp_path, capsys):
    assert run(["check", "--model", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"p": 2, "k": 1}')
    assert run(["check", "--model", str(bad)]) == 2
    assert "$" in capsys.readouterr().err
    assert run(["no-such-command"]) == 2
    assert run(["simulate", "--model", LIN]) == 2


def test_simulate_then_decompose(tmp_path):
    path = tmp_path / "path.csv"
    args = ["simulate", "--model", THR, "--init", str(FIXTURES / "init.csv"),
            "--gaussian", str(FIXTURES / "sigma.json"), "--T", "100", "--seed", "4", "--out", str(path)]
    assert run(args) == 0
    text = path.read_text()
    assert text.startswith("# nlsvar ")
    cols, data = _csv(path)
    assert cols == ["t", "z_1", "z_2", "u_1", "u_2"]
    assert data.shape == (101, 5) and data[0, 0] == 0
    # reproducible output is byte-identical across runs
    p2, p3 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args[:-1] + [str(p2), "--reproducible"]) == 0
    assert run(args[:-1] + [str(p3), "--reproducible"]) == 0
    assert p2.read_bytes() == p3.read_bytes() and not p2.read_text().startswith("#")
    dec = tmp_path / "dec.csv"
    assert run(["decompose", "--model", THR, "--path", str(path), "--out", str(dec)]) == 0
    cols, data = _csv(dec)
    assert cols == ["t", "psi_1", "theta_1", "xi_1", "residual"]
    assert data.shape[0] == 100
    assert data[:, -1].max() <= 1e-8


def test_simulate_with_shock_file(tmp_path):
    shocks = tmp_path / "u.csv"
    shocks.write_text("t,u_1,u_2\n1,1,0\n2,0,0\n3,0,0\n")
    out = tmp_path / "p.csv"
    assert run(["simulate", "--model", LIN, "--init", str(FIXTURES / "init.csv"), "--shocks", str(shocks),
                "--out", str(out), "--reproducible"]) == 0
    _, data = _csv(out)
    np.testing.assert_allclose(data[1, 1:3], [0.5 + 1 - 0.5 * 0.75, -0.25])


def test_attractor_multipliers_identify(tmp_path, capsys):
    grid = tmp_path / "g.csv"
    grid.write_text("w_1\n-1\n0\n2\n")
    pts = tmp_path / "pts.csv"
    assert run(["attractor", "--model", THR, "--grid", str(grid), "--out", str(pts)]) == 0
    _, data = _csv(pts)
    assert data.shape == (3, 3)
    at = tmp_path / "at.csv"
    at.write_text("z_1,z_2\n" + "\n".join(f"{a},{b}" for a, b in data[:, 1:]) + "\n")
    theta = tmp_path / "theta.csv"
    assert run(["multipliers", "--model", THR, "--at", str(at), "--out", str(theta)]) == 0
    lines = [ln for ln in theta.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == "point,differentiable,rank,row,c_1,c_2" and len(lines) == 7
    ups = tmp_path / "ups.csv"
    assert run(["identify", "--model", LIN, "--m", "1", "--out", str(ups)]) == 0
    assert json.loads(capsys.readouterr().out.strip().splitlines()[-1])["ok"] is True
    _, U = _csv(ups)
    np.testing.assert_allclose(U.T @ U, np.eye(2), atol=1e-12)


def test_multipliers_off_attractor_is_domain_error(tmp_path):
    at = tmp_path / "at.csv"
    at.write_text("z_1,z_2\n1,0\n")
    assert run(["multipliers", "--model", LIN, "--at", str(at), "--out", str(tmp_path / "o.csv")]) == 1


def test_transitory_and_jsr(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha_tilde": [-1, -0.5], "alpha": [-1, -0.25], "beta": [1, -1],
                               "magnitudes": [0.01, 1.0, 20.0]}))
    out = tmp_path / "curve.csv"
    assert run(["transitory", "--config", str(cfg), "--out", str(out)]) == 0
    cols, data = _csv(out)
    assert cols[:2] == ["magnitude", "ratio"]
    assert 0.49 <= data[0, 1] <= 0.51 and 0.25 <= data[2, 1] <= 0.27
    assert run(["jsr", "--matrices", str(FIXTURES / "golden_pair.json"), "--depth", "12"]) == 0
    br = json.loads(capsys.readouterr().out)
    assert br["lower"] == pytest.approx((1 + 5**0.5) / 2)


def test_transitory_bad_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alpha": [-1, -0.25]}))
    assert run(["transitory", "--config", str(cfg), "--out", str(tmp_path / "c.csv")]) == 2
    cfg.write_text(json.dumps({"alpha_tilde": [-3, 0], "alpha": [-1, -0.25], "beta": [1, -1], "magnitudes": [1]}))
    assert run(["transitory", "--config", str(cfg), "--out", str(tmp_path / "c.csv")]) == 1


def test_console_script_entry_point():
    out = subprocess.run([sys.executable, "-m", "nlsvar.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("nlsvar ")
