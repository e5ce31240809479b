import csv
import io
import json
import math
import subprocess
import sys

import pytest

from algebroid_kit.cli import main
from algebroid_kit.fixtures import corrupted_almost_algebroid
from algebroid_kit.io import algebroid_to_dict, dump_json, hamiltonian_to_dict
from algebroid_kit.algebroid import tangent_algebroid
from algebroid_kit.mechanics import harmonic_oscillator_system


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def tangent_json(tmp_path):
    p = tmp_path / "tangent3.json"
    p.write_text(dump_json(algebroid_to_dict(tangent_algebroid(3))))
    return str(p)


def test_verify_tangent_json(tangent_json):
    code, out, _ = run("verify", tangent_json)
    assert code == 0
    doc = json.loads(out)
    assert doc["pass"] is True
    assert all(r["max_residual"] == 0.0 for r in doc["results"])
    assert {"check", "site", "max_residual", "pass"} <= set(doc["results"][0])


def test_verify_almost_algebroid_names_triple(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(dump_json(algebroid_to_dict(corrupted_almost_algebroid())))
    code, out, err = run("verify", str(p))
    assert code == 1
    doc = json.loads(out)
    failing = [r for r in doc["results"] if not r["pass"]]
    assert any(r["check"] == "jacobi" and r["site"].startswith(("(", "random")) for r in failing)
    assert any(r["check"] == "d_squared" for r in failing)
    assert "check failed" in err


def test_prolong_emits_algebroid(tmp_path):
    src = algebroid_to_dict(tangent_algebroid(2))
    src["fiber_dim"] = 2
    p = tmp_path / "in.json"
    p.write_text(json.dumps(src))
    out_path = tmp_path / "out.json"
    code, _, _ = run("prolong", str(p), "--out", str(out_path))
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert doc["base_dim"] == 4 and doc["rank"] == 4
    code, _, _ = run("verify", str(out_path), "--out", str(tmp_path / "r.json"))
    assert code == 0


def test_prolong_needs_fiber_dim(tangent_json):
    code, _, err = run("prolong", tangent_json)
    assert code == 2 and "fiber" in err


def test_limit_verify_table():
    code, out, _ = run("limit-verify", "tangent-tower:3", "--family", "euler", "--prolong", "1,2,3")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split()[:2] == ["check", "site"]
    assert any(line.startswith("prolonged:anchor_compat") for line in lines)
    assert any(line.startswith("field_compat") for line in lines)
    assert lines[-1].startswith("overall: PASS")


def test_limit_verify_perturbed_fails():
    code, out, _ = run("limit-verify", "perturbed-tower:4")
    assert code == 1
    assert "FAIL" in out


def test_simulate_quarter_turn(tmp_path):
    traj = tmp_path / "traj.csv"
    code, out, _ = run("simulate", "--system", "oscillator:1", "--z0", "1,0", "--T", "1.5707963",
                       "--out", str(traj))
    assert code == 0
    summary = json.loads(out)
    assert abs(summary["final"][0]) < 1e-6 and abs(summary["final"][1] + 1) < 1e-6
    with open(traj) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x1", "mu1", "H", "r1^2"]
    assert abs(float(rows[-1][0]) - 1.5707963) < 1e-15
    assert abs(float(rows[-1][2]) + 1) < 1e-6


def test_simulate_from_json(tmp_path):
    p = tmp_path / "osc2.json"
    p.write_text(dump_json(hamiltonian_to_dict(harmonic_oscillator_system(2))))
    e = math.sqrt(math.e)
    code, out, _ = run("simulate", "--system", str(p), "--z0", f"{e},{e},0,0", "--T", "1", "--dt", "1e-2")
    assert code == 0
    assert max(json.loads(out)["drift"].values()) < 1e-6


def test_simulate_domain_error():
    code, _, err = run("simulate", "--system", "oscillator:1", "--z0", "0,0")
    assert code == 3 and "domain" in err


@pytest.mark.parametrize(
    "argv",
    [
        ("verify", "nosuch:1"),
        ("verify", "tangent:x"),
        ("simulate", "--system", "oscillator:1", "--z0", "1,0,0"),
        ("simulate", "--system", "oscillator:1", "--z0", "a,b"),
        ("verify", "tangent:2", "--samples", "4"),
        ("verify", "tangent:2", "--tol", "0"),
        ("bogus",),
    ],
)
def test_parse_errors_exit_2(argv):
    code, _, _ = run(*argv)
    assert code == 2


def test_missing_file_exit_2(tmp_path):
    code, _, _ = run("verify", str(tmp_path / "nope.json"))
    assert code == 2


def test_describe():
    code, out, _ = run("describe", "nijenhuis:1")
    assert code == 0
    assert "base_dim 2, rank 2" in out
    assert "C_12^1 = (- y1)" in out
    code, out, _ = run("describe", "oscillator-tower:2")
    assert "level 2: base_dim 4, rank 4" in out
    code, out, _ = run("describe", "oscillator:1")
    assert "H = (ln (+ (^ x1 2) (^ mu1 2)))" in out


def test_threads_env_does_not_change_report(monkeypatch):
    monkeypatch.setenv("ALGEBROID_KIT_THREADS", "1")
    a = run("limit-verify", "oscillator-tower:2", "--seed", "5")[1]
    monkeypatch.setenv("ALGEBROID_KIT_THREADS", "4")
    b = run("limit-verify", "oscillator-tower:2", "--seed", "5")[1]
    assert a == b


def test_console_entry_point_subprocess(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run(
        [sys.executable, "-m", "algebroid_kit.cli", "verify", "tangent:2", "--seed", "3", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["seed"] == 3
