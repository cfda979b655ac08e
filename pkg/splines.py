"""
Mixed Splines - indefinite abstract splines as a QP1QEC instance

    minimize   [Ux, Ux]_1 + mu [Wx - w0, Wx - w0]_2
    subject to [Vx - z0, Vx - z0]_E = 0

Stacking T = (U; W) with J_K = diag(J1, mu*J2) and target (0, w0) turns this
into the main problem.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Any

import numpy as np
import scipy.linalg

from errors import DimensionMismatchError, InvalidProblemError
from krein_linalg import (
    DEFAULT_TOL,
    KreinSignature,
    ToleranceConfig,
    nullspace_basis,
    numerical_rank,
    subspace_intersection,
)
from solver import Problem

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MixedSplinesProblem:
    U: np.ndarray
    J1: KreinSignature
    W: np.ndarray
    J2: KreinSignature
    V: np.ndarray
    J_E: KreinSignature
    mu: float
    w0: np.ndarray
    z0: np.ndarray
    tol: ToleranceConfig = DEFAULT_TOL

    def __post_init__(self):
        U = np.atleast_2d(np.asarray(self.U, dtype=float))
        W = np.atleast_2d(np.asarray(self.W, dtype=float))
        V = np.atleast_2d(np.asarray(self.V, dtype=float))
        if self.mu == 0 or not np.isfinite(self.mu):
            raise InvalidProblemError(f"mu must be a nonzero real, got {self.mu}")
        if U.shape[0] != self.J1.dim or W.shape[0] != self.J2.dim or V.shape[0] != self.J_E.dim:
            raise DimensionMismatchError("U, W, V row counts must match J1, J2, J_E")
        if not (U.shape[1] == W.shape[1] == V.shape[1]):
            raise DimensionMismatchError(
                f"U, W, V must share the column count, got {U.shape[1]}, {W.shape[1]}, {V.shape[1]}"
            )
        if np.asarray(self.w0).size != W.shape[0] or np.asarray(self.z0).size != V.shape[0]:
            raise DimensionMismatchError("w0 must match the rows of W and z0 the rows of V")
        for name, arr in (("U", U), ("W", W), ("V", V)):
            if numerical_rank(arr, self.tol) != arr.shape[0]:
                raise InvalidProblemError(f"{name} is not surjective")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "w0", np.asarray(self.w0, dtype=float).ravel())
        object.__setattr__(self, "z0", np.asarray(self.z0, dtype=float).ravel())

    @property
    def n(self) -> int:
        return self.U.shape[1]

    def objective(self, x: np.ndarray) -> float:
        """[Ux, Ux]_1 + mu [Wx - w0, Wx - w0]_2"""
        u = self.U @ x
        r = self.W @ x - self.w0
        return float(u @ self.J1.J @ u) + self.mu * float(r @ self.J2.J @ r)


def build_problem(msp: MixedSplinesProblem) -> Problem:
    """Stack (U; W) into T with J_K = blockdiag(J1, mu*J2)"""
    T = np.vstack([msp.U, msp.W])
    J_K = KreinSignature(scipy.linalg.block_diag(msp.J1.J, msp.mu * msp.J2.J))
    w0 = np.concatenate([np.zeros(msp.U.shape[0]), msp.w0])
    return Problem(T, J_K, msp.V, msp.J_E, w0, msp.z0, msp.tol)


@dataclass(frozen=True)
class SurjectivityReport:
    surjective: bool
    n: int
    dim_null_U: int
    dim_null_W: int
    dim_intersection: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "surjective": self.surjective,
            "n": self.n,
            "dim_N_U": self.dim_null_U,
            "dim_N_W": self.dim_null_W,
            "dim_intersection": self.dim_intersection,
        }


def check_T_surjective(U: np.ndarray, W: np.ndarray, tol: ToleranceConfig = DEFAULT_TOL) -> SurjectivityReport:
    """
    T = (U; W) is onto iff N(U) + N(W) is the whole space, i.e.
    dim N(U) + dim N(W) - dim(N(U) ∩ N(W)) = n.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if U.shape[1] != W.shape[1]:
        raise DimensionMismatchError(f"U has {U.shape[1]} columns, W has {W.shape[1]}")
    n = U.shape[1]
    dim_u = nullspace_basis(U, tol).shape[1]
    dim_w = nullspace_basis(W, tol).shape[1]
    dim_both = subspace_intersection(U, W, tol=tol).shape[1]
    ok = dim_u + dim_w - dim_both == n
    logger.info("%s T = (U; W) surjective: dim N(U)=%d dim N(W)=%d dim cap=%d n=%d",
                "✓" if ok else "✗", dim_u, dim_w, dim_both, n)
    return SurjectivityReport(bool(ok), n, dim_u, dim_w, dim_both)
