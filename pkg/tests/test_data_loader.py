import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

import config
from data_loader import ProblemLoader
from errors import DimensionMismatchError, ProblemFileError
from oracle import generate_problem


@pytest.fixture
def loader(tmp_path):
    return ProblemLoader(tmp_path)


@pytest.fixture
def diag_doc(diag_sphere):
    return ProblemLoader().dump_problem(diag_sphere)


def test_dump_layout(diag_doc):
    assert diag_doc["n"] == 3 and diag_doc["mK"] == 3 and diag_doc["mE"] == 3
    assert diag_doc["JK"] == [1.0, -1.0, 1.0]
    assert len(diag_doc["T"]) == 9


def test_round_trip_is_exact(loader, tmp_path):
    problem = generate_problem(4, seed=17)
    path = tmp_path / "p.json"
    doc = loader.dump_problem(problem, path)
    again = loader.load_problem(path)
    assert np.array_equal(again.T, problem.T)
    assert np.array_equal(again.V, problem.V)
    assert np.array_equal(again.w0, problem.w0)
    assert again.J_K == problem.J_K
    assert loader.dump_problem(again) == doc


def test_full_signature_matrix(loader, diag_doc):
    doc = dict(diag_doc, JE=[4.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0])
    parsed = loader.parse(doc)
    assert_allclose(parsed.problem.J_E.J, np.diag([4.0, 1.0, -1.0]))


@pytest.mark.parametrize("key", ["n", "T", "JE", "z0"])
def test_missing_key(loader, diag_doc, key):
    doc = {k: v for k, v in diag_doc.items() if k != key}
    with pytest.raises(ProblemFileError):
        loader.parse(doc)


def test_non_numeric(loader, diag_doc):
    with pytest.raises(ProblemFileError):
        loader.parse(dict(diag_doc, w0=["a", "b", "c"]))


def test_bad_diagonal_signature(loader, diag_doc):
    with pytest.raises(ProblemFileError):
        loader.parse(dict(diag_doc, JK=[1.0, 2.0, 1.0]))


def test_dimension_mismatch(loader, diag_doc):
    with pytest.raises(DimensionMismatchError):
        loader.parse(dict(diag_doc, w0=[1.0, 2.0]))


def test_invalid_json(loader, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ProblemFileError):
        loader.load(path)
    with pytest.raises(ProblemFileError):
        loader.load(tmp_path / "missing.json")


def test_tolerance_priority(loader, diag_doc, monkeypatch):
    monkeypatch.setenv(config.TOLERANCE_ENV, "1e-5")
    doc = dict(diag_doc, tolerances={"residual_tol": 1e-6, "psd_tol": 1e-8})
    assert loader.parse(diag_doc).tol.residual_tol == 1e-5
    assert loader.parse(doc).tol.residual_tol == 1e-6
    assert loader.parse(doc).tol.psd_tol == 1e-8
    assert loader.parse(doc, residual_tol=1e-7).tol.residual_tol == 1e-7


def test_unknown_tolerance(loader, diag_doc):
    with pytest.raises(ProblemFileError):
        loader.parse(dict(diag_doc, tolerances={"speed": 1.0}))


def test_splines_block(loader):
    doc = {
        "n": 2, "mE": 2,
        "V": [1.0, 0.0, 0.0, 1.0], "JE": [1.0, -1.0], "z0": [0.0, 0.0],
        "splines": {"U": [1.0, 0.0], "J1": [1.0], "W": [0.0, 1.0], "J2": [1.0], "mu": 2.0, "w0": [1.0]},
    }
    parsed = loader.parse(doc)
    assert parsed.problem is None
    assert parsed.splines.mu == 2.0
    assert parsed.splines.U.shape == (1, 2)


def test_load_vector(loader, tmp_path):
    (tmp_path / "x.json").write_text(json.dumps([1.0, 2.0, 3.0]), encoding="utf-8")
    (tmp_path / "y.json").write_text(json.dumps({"x": [1.0, 2.0]}), encoding="utf-8")
    assert_allclose(loader.load_vector("x.json"), [1.0, 2.0, 3.0])
    assert_allclose(loader.load_vector(tmp_path / "y.json"), [1.0, 2.0])
    with pytest.raises(DimensionMismatchError):
        loader.load_vector(tmp_path / "y.json", length=3)


def test_report_json_handles_non_finite():
    text = ProblemLoader.to_json({"a": float("nan"), "b": np.float64(0.1), "c": np.array([1, 2]), "d": np.bool_(True)})
    assert json.loads(text) == {"a": None, "b": 0.1, "c": [1, 2], "d": True}


def test_validate_data(loader, diag_doc):
    assert loader.validate_data(diag_doc)["errors"] == []
    assert loader.validate_data({"n": 1})["errors"]
