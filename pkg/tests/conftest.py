"""Shared fixtures: diagonal three-variable family and small hand-built problems"""

import json

import numpy as np
import pytest

from krein_linalg import KreinSignature
from solver import Problem, diagonal_problem


@pytest.fixture
def diag_sphere():
    """alpha=4, beta=1/2 with T#w0 = (1, 0, 1): sphere of minimizers at lambda = 1/2"""
    return diagonal_problem(rhs=(1.0, 0.0, 1.0))


@pytest.fixture
def diag_factory():
    return diagonal_problem


@pytest.fixture
def empty_interval_problem():
    """A = diag(-1, 0), B = diag(1, -1): no rho makes A + rho*B PSD"""
    return Problem(
        T=np.array([[1.0, 0.0]]),
        J_K=KreinSignature.diagonal([-1.0]),
        V=np.eye(2),
        J_E=KreinSignature.diagonal([1.0, -1.0]),
        w0=np.zeros(1),
        z0=np.zeros(2),
    )


@pytest.fixture
def point_interval_problem():
    """A = B = diag(1, -1): the PSD interval is the single point -1"""
    J = KreinSignature.diagonal([1.0, -1.0])

    def _build(w0, z0):
        return Problem(np.eye(2), J, np.eye(2), J, np.asarray(w0, float), np.asarray(z0, float))
    return _build


@pytest.fixture
def singular_m_problem():
    """
    Proper interval [1/2, 1] but A + rho*B is singular on the interior:
    e4 lies in N(A) ∩ N(B) while T e4 != 0.
    """
    T = np.zeros((5, 4))
    T[0, 0], T[1, 1], T[2, 2] = 1.0, 1.0 / np.sqrt(2.0), 1.0
    T[3, 3] = T[4, 3] = 1.0
    V = np.zeros((3, 4))
    V[0, 0], V[1, 1], V[2, 2] = 2.0, 1.0, 1.0
    return Problem(
        T,
        KreinSignature.diagonal([1.0, -1.0, 1.0, 1.0, -1.0]),
        V,
        KreinSignature.diagonal([1.0, 1.0, -1.0]),
        w0=np.array([1.0, 0.0, 1.0, 0.0, 0.0]),
        z0=np.zeros(3),
    )


@pytest.fixture
def write_json(tmp_path):
    def _write(name, doc):
        path = tmp_path / name
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path
    return _write
