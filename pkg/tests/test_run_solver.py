import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

import config
from data_loader import ProblemLoader
from run_solver import main


@pytest.fixture
def diag_file(diag_sphere, tmp_path):
    path = tmp_path / "diag_sphere.json"
    ProblemLoader().dump_problem(diag_sphere, path)
    return path


def _run(capsys, argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def test_solve_left_end_sphere(capsys, diag_file):
    code, out = _run(capsys, ["solve", diag_file])
    report = json.loads(out)
    assert code == config.EXIT_OK
    assert report["status"] == "SOLVED"
    assert_allclose(report["lambda"], 0.5, atol=1e-10)
    assert_allclose(report["solution"]["radius"], 1.8856180831641267, atol=1e-8)
    assert report["subspace_dims"]["N_plus"] == 1
    assert "solve" in report["timings_ms"]
    assert report["existence_for_all_data"]["verdict"] is True


def test_analyze(capsys, diag_file):
    code, out = _run(capsys, ["analyze", diag_file])
    report = json.loads(out)
    assert code == config.EXIT_OK
    assert_allclose(report["interval"]["rho_minus"], 0.5, atol=1e-9)
    assert_allclose(report["interval"]["rho_plus"], 1.0, atol=1e-9)
    assert_allclose(report["kappa"], 0.25, atol=1e-9)
    assert report["existence_for_all_data"]["verdict"] is True


def test_verify(capsys, diag_file, tmp_path):
    x_path = tmp_path / "x.json"
    x_path.write_text(json.dumps([1.0 / 3.0, 4.0 * np.sqrt(2.0) / 3.0, 2.0]), encoding="utf-8")
    code, out = _run(capsys, ["verify", diag_file, "--x", x_path, "--lambda", "0.5"])
    assert code == config.EXIT_OK
    assert json.loads(out)["passed"] is True
    code, _ = _run(capsys, ["verify", diag_file, "--x", x_path, "--lambda", "2.0"])
    assert code == config.EXIT_VERIFY_FAILED


def test_unbounded_exit(capsys, empty_interval_problem, tmp_path):
    path = tmp_path / "empty.json"
    ProblemLoader().dump_problem(empty_interval_problem, path)
    code, out = _run(capsys, ["solve", path])
    assert code == config.EXIT_UNBOUNDED
    assert json.loads(out)["certificate"] is not None


def test_degenerate_exit(capsys, point_interval_problem, tmp_path):
    path = tmp_path / "point.json"
    ProblemLoader().dump_problem(point_interval_problem([1.0, 0.0], [0.0, 1.0]), path)
    code, out = _run(capsys, ["solve", path])
    assert code == config.EXIT_DEGENERATE
    assert json.loads(out)["degenerate_status"] == "NO_VERIFIED_SOLUTION"


def test_malformed_and_mismatch(capsys, write_json, diag_sphere):
    code = main(["solve", str(write_json("bad.json", {"n": 3}))])
    assert code == config.EXIT_MALFORMED
    assert "ERROR" in capsys.readouterr().err

    doc = ProblemLoader().dump_problem(diag_sphere)
    doc["w0"] = [1.0]
    code = main(["solve", str(write_json("short.json", doc))])
    assert code == config.EXIT_DIMENSION
    assert "dimension mismatch" in capsys.readouterr().err


def test_definite_constraint_signature(capsys, write_json, diag_sphere):
    doc = dict(ProblemLoader().dump_problem(diag_sphere), JE=[1.0, 1.0, 1.0])
    code = main(["solve", str(write_json("definite.json", doc))])
    assert code == config.EXIT_MALFORMED
    assert "must be indefinite" in capsys.readouterr().err


def test_generate_then_solve(capsys, tmp_path):
    path = tmp_path / "gen.json"
    code, out = _run(capsys, ["generate", "--n", 4, "--seed", 5, "--planted-interval", -0.5, 1.5,
                              "--output", path])
    assert code == config.EXIT_OK
    assert json.loads(out)["n"] == 4
    code, out = _run(capsys, ["solve", path])
    assert code == config.EXIT_OK
    assert json.loads(out)["residuals"]["passed"] is True


def test_splines(capsys, write_json):
    base = {"n": 2, "mE": 2, "V": [1.0, 0.0, 0.0, 1.0], "JE": [1.0, -1.0], "z0": [0.0, 0.0]}
    good = dict(base, splines={"U": [1.0, 0.0], "J1": [1.0], "W": [0.0, 1.0], "J2": [1.0], "mu": 2.0, "w0": [1.0]})
    code, out = _run(capsys, ["splines", write_json("good.json", good)])
    assert code == config.EXIT_OK
    report = json.loads(out)
    assert report["status"] == "SOLVED"
    assert "existence_for_all_data" in report

    bad = dict(base, splines={"U": [1.0, 0.0], "J1": [1.0], "W": [1.0, 0.0], "J2": [1.0], "mu": 2.0, "w0": [1.0]})
    code, out = _run(capsys, ["splines", write_json("bad.json", bad)])
    assert code == config.EXIT_NOT_SURJECTIVE
    assert json.loads(out)["surjectivity"]["surjective"] is False


def test_sweep_csv(capsys, diag_file):
    code, out = _run(capsys, ["sweep", diag_file, "--grid", 5])
    lines = out.strip().splitlines()
    assert code == config.EXIT_OK
    assert lines[0] == "lambda,x_hat,normal_residual,constraint"
    assert len(lines) == 6
