import json
import os
import subprocess
import sys

import numpy as np
import pytest

from moebius_curves.cli import main
from moebius_curves.geodesics import solve_curvatures, triple_from_roots
from moebius_curves.models import read_csv, write_csv
from moebius_curves.verification import helix_curve, spherical_closed_curve


@pytest.fixture(scope="module")
def geodesic_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("geo")
    assert main(["geodesic", "--roots", "-1", "1", "2", "--out", str(out)]) == 0
    return out


def _table(path):
    sc = read_csv(path)
    return sc.ts, sc.points


def test_geodesic_outputs(geodesic_dir, capsys):
    rep = json.loads((geodesic_dir / "report.json").read_text())
    assert rep["C1"] == pytest.approx(1.0)
    assert rep["C2"] == pytest.approx(np.sqrt(2))
    assert rep["checks"] == {"energy": True, "lightlike": True}
    s, v = _table(geodesic_dir / "geodesic.csv")
    assert v.shape[1] == 6
    assert np.allclose(v[:, 0] + v[:, -1], 1.0)
    q = v[:, 1:-1] @ v[:, 1:-1].T
    assert np.allclose(np.diag(q) - 2 * v[:, 0] * v[:, -1], 0.0, atol=1e-12)
    sol = solve_curvatures(triple_from_roots(-1, 1, 2))
    assert s[-1] == pytest.approx(2 * sol.period, rel=1e-9)


def test_geodesic_roundtrip_through_invariants(geodesic_dir, tmp_path):
    out = tmp_path / "inv"
    code = main(["invariants", "--in", str(geodesic_dir / "geodesic_chart.csv"), "--out", str(out)])
    assert code == 0
    import csv

    rows = list(csv.DictReader(open(out / "conformal_invariants.csv")))
    t = np.array([float(r["t"]) for r in rows])
    mu = np.array([[float(r[f"mu{j}"]) for j in (1, 2, 3)] for r in rows])
    sol = solve_curvatures(triple_from_roots(-1, 1, 2))
    ref = np.column_stack([sol.mu1(t), sol.mu2(t), sol.mu3(t)])
    assert np.max(np.abs(mu - ref)) < 1e-4
    gen = json.loads((out / "genericity.json").read_text())
    assert gen["vertex_count"] == 0 and gen["n"] == 4
    assert (out / "euclidean_invariants.csv").exists()


def test_geodesic_json_format_and_padding(tmp_path):
    out = tmp_path / "j"
    code = main(["geodesic", "--triple", "1", str(np.sqrt(2)), "1", "--n", "6", "--motion-seed", "3",
                 "--format", "json", "--range", "0", "1", "--step", "0.1", "--out", str(out)])
    assert code == 0
    data = json.loads((out / "geodesic.json").read_text())
    assert len(data["s"]) == 11
    assert set(data) == {"s"} | {f"e0_{i}" for i in range(8)}


def test_geodesic_inadmissible_triple(tmp_path, capsys):
    assert main(["geodesic", "--triple", "0", "3", "-5", "--out", str(tmp_path)]) == 2
    assert "case (i)" in capsys.readouterr().err


def test_parse_errors_exit_1(tmp_path, capsys):
    assert main(["geodesic"]) == 1
    assert main(["nonsense"]) == 1
    assert main(["geodesic", "--roots", "-1", "1", "2", "--step", "-1"]) == 1
    assert main(["invariants", "--in", str(tmp_path / "missing.csv")]) == 1


def test_circle_reports_vertices(tmp_path, capsys):
    ts = np.linspace(0, 2 * np.pi, 401)
    p = tmp_path / "circle.csv"
    write_csv(p, ["t", "x1", "x2"], [ts, np.cos(ts), np.sin(ts)])
    assert main(["invariants", "--in", str(p), "--out", str(tmp_path / "o")]) == 3
    gen = json.loads((tmp_path / "o" / "genericity.json").read_text())
    assert gen["vertex_count"] == 400
    assert "vertices" in capsys.readouterr().err


def test_helix_invariants_from_samples(tmp_path):
    c = helix_curve(1.0, 0.5, domain=(0.0, 6.0))
    ts = np.linspace(0, 6, 301)
    p = tmp_path / "helix.csv"
    write_csv(p, ["t", "x1", "x2", "x3"], [ts, *c.evaluate(ts).T])
    assert main(["invariants", "--in", str(p), "--out", str(tmp_path / "o")]) == 0
    import csv

    rows = list(csv.DictReader(open(tmp_path / "o" / "conformal_invariants.csv")))
    mu1 = np.array([float(r["mu1"]) for r in rows])
    assert np.max(np.abs(mu1 + 1.0)) < 1e-3


def test_convert_roundtrip(tmp_path):
    ts = np.linspace(0, 1, 21)
    x = np.column_stack([ts, ts ** 2, np.sin(ts)])
    p = tmp_path / "pts.csv"
    write_csv(p, ["t", "x1", "x2", "x3"], [ts, *x.T])
    assert main(["convert", "--in", str(p), "--to", "sphere", "--out", str(tmp_path)]) == 0
    assert main(["convert", "--in", str(tmp_path / "converted_sphere.csv"), "--to", "euclidean",
                 "--out", str(tmp_path / "back")]) == 0
    _, y = _table(tmp_path / "back" / "converted_euclidean.csv")
    assert np.max(np.abs(y - x)) < 1e-12


def test_convert_rejects_off_cone(tmp_path):
    ts = np.linspace(0, 1, 10)
    p = tmp_path / "bad.csv"
    write_csv(p, ["t", "v0", "v1", "v2", "v3"], [ts, ts + 1, ts, ts, ts + 5])
    assert main(["convert", "--in", str(p), "--out", str(tmp_path)]) == 2


def _tennis_csv(tmp_path, num=257):
    c = spherical_closed_curve()
    ts = np.linspace(0, 2 * np.pi, num)
    pts = c.evaluate(ts)
    pts[-1] = pts[0]
    p = tmp_path / "tennis.csv"
    write_csv(p, ["t", "x1", "x2", "x3"], [ts, *pts.T])
    return p


def test_twist_command(tmp_path, capsys):
    p = _tennis_csv(tmp_path)
    assert main(["twist", "--in", str(p), "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "twist.json").read_text())
    assert res["distance_to_integer"] < 1e-8
    assert main(["twist", "--in", str(p), "--motion-seed", "2", "--out", str(tmp_path / "m")]) == 0
    res2 = json.loads((tmp_path / "m" / "twist.json").read_text())
    assert res2["distance_to_integer"] < 1e-8


def test_twist_open_curve_is_math_error(tmp_path):
    ts = np.linspace(0, 1, 50)
    p = tmp_path / "open.csv"
    write_csv(p, ["t", "x1", "x2", "x3"], [ts, np.cos(ts), np.sin(ts), ts])
    assert main(["twist", "--in", str(p), "--out", str(tmp_path)]) == 2


def test_verify_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "--seed", "7", "--out", str(a)]) == 0
    assert main(["verify", "--seed", "7", "--out", str(b)]) == 0
    assert (a / "verify_report.json").read_bytes() == (b / "verify_report.json").read_bytes()
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 20 and all(ln.startswith("PASS") for ln in lines)


def test_verify_perturbation_fails_el(tmp_path, capsys):
    assert main(["verify", "--perturb", "1e-3", "--out", str(tmp_path)]) == 1
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    status = {c["name"]: c["passed"] for c in rep["checks"]}
    assert status["euler_lagrange"] is False
    assert status["elliptic"] is True


def test_console_script_and_logging(tmp_path):
    env = dict(os.environ, MOEBIUS_LOG="debug")
    ts = np.linspace(0, 2 * np.pi, 101)
    p = tmp_path / "c.csv"
    write_csv(p, ["t", "x1", "x2"], [ts, np.cos(ts), np.sin(ts)])
    r = subprocess.run([sys.executable, "-m", "moebius_curves", "invariants", "--in", str(p),
                        "--out", str(tmp_path)], env=env, capture_output=True, text=True)
    assert r.returncode == 3
    assert "vertices" in r.stderr and "WARNING" in r.stderr
    quiet = subprocess.run([sys.executable, "-m", "moebius_curves", "invariants", "--in", str(p),
                            "--out", str(tmp_path)], env=dict(os.environ, MOEBIUS_LOG="quiet"),
                           capture_output=True, text=True)
    assert "WARNING" not in quiet.stderr
