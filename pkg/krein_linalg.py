"""
Krein Linear Algebra - signature-weighted primitives

Indefinite adjoints, Gram forms, symmetric eigendecomposition,
pseudoinverses, matrix square roots and nullspaces, all governed by one
ToleranceConfig. Real scalars only; the domain space carries the identity
Gram matrix.
"""

import logging
import os
from dataclasses import dataclass, asdict, replace
from typing import Dict, Any, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

import config
from errors import (
    DimensionMismatchError,
    NotSymmetricError,
    NotPSDError,
    SingularMatrixError,
    QP1QECError,
)

logger = logging.getLogger(__name__)

_EPS = np.finfo(float).eps


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


# ============================================================
# Tolerances
# ============================================================

@dataclass(frozen=True)
class ToleranceConfig:
    """
    One tolerance policy shared by every numerical decision.

    Attributes:
        rank_tol: relative singular-value cutoff for rank decisions
        psd_tol: eigenvalue nonnegativity slack (relative to a scale)
        root_tol: bisection width
        residual_tol: verification slack (relative)
        max_iter: bisection / refinement cap
    """
    rank_tol: float = config.DEFAULT_RANK_TOL
    psd_tol: float = config.DEFAULT_PSD_TOL
    root_tol: float = config.DEFAULT_ROOT_TOL
    residual_tol: float = config.DEFAULT_RESIDUAL_TOL
    max_iter: int = config.DEFAULT_MAX_ITER

    def __post_init__(self):
        for name in ("rank_tol", "psd_tol", "root_tol", "residual_tol", "max_iter"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise QP1QECError(f"Tolerance {name} must be strictly positive, got {value}")
        if self.root_tol < _EPS:
            raise QP1QECError(f"root_tol must be >= machine epsilon, got {self.root_tol}")

    @classmethod
    def from_env(cls, **overrides) -> "ToleranceConfig":
        """
        Build a config, letting QP1QEC_TOLERANCE override residual_tol.

        Explicit keyword overrides win over the environment.
        """
        raw = os.getenv(config.TOLERANCE_ENV)
        if raw and "residual_tol" not in overrides:
            try:
                overrides["residual_tol"] = float(raw)
            except ValueError:
                logger.warning("Ignoring malformed %s=%r", config.TOLERANCE_ENV, raw)
        return cls(**overrides)

    def with_overrides(self, **kwargs) -> "ToleranceConfig":
        return replace(self, **kwargs)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


DEFAULT_TOL = ToleranceConfig()


# ============================================================
# Krein signatures
# ============================================================

@dataclass(frozen=True, eq=False)
class KreinSignature:
    """
    Gram matrix J of the indefinite inner product [x, y] = y^T J x.

    J must be symmetric and invertible. Canonical constructors give
    diagonal +-1 matrices.
    """
    J: np.ndarray

    def __post_init__(self):
        J = np.atleast_2d(np.asarray(self.J, dtype=float))
        if J.ndim != 2 or J.shape[0] != J.shape[1] or J.shape[0] == 0:
            raise DimensionMismatchError(f"Signature matrix must be square and non-empty, got shape {J.shape}")
        scale = max(1.0, float(np.max(np.abs(J))))
        if np.max(np.abs(J - J.T)) > 10 * _EPS * scale:
            raise NotSymmetricError("Signature matrix is not symmetric")
        smin = scipy.linalg.svdvals(J).min()
        if smin <= DEFAULT_TOL.rank_tol * scale:
            raise SingularMatrixError(f"Signature matrix is singular (sigma_min={smin:.3e})")
        object.__setattr__(self, "J", _frozen(J))

    @classmethod
    def diagonal(cls, signs: Sequence[float]) -> "KreinSignature":
        return cls(np.diag(np.asarray(signs, dtype=float)))

    @classmethod
    def identity(cls, dim: int) -> "KreinSignature":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.J.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return bool(np.all(self.J == np.diag(np.diag(self.J))))

    @property
    def positive_dim(self) -> int:
        return int(np.sum(np.linalg.eigvalsh(self.J) > 0))

    @property
    def negative_dim(self) -> int:
        return self.dim - self.positive_dim

    def inner(self, x: np.ndarray, y: np.ndarray) -> float:
        """[x, y] = y^T J x"""
        return float(np.asarray(y) @ self.J @ np.asarray(x))

    def fundamental_decomposition(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Orthogonal projectors (P+, P-) onto the positive and negative parts
        of the space, so that P+ + P- = I and [x, x] > 0 on range(P+) \\ {0}.
        """
        spec = sym_eig(self.J)
        pos = spec.eigenvectors[:, spec.eigenvalues > 0]
        neg = spec.eigenvectors[:, spec.eigenvalues < 0]
        return pos @ pos.T, neg @ neg.T

    def to_list(self):
        """Diagonal +-1 list when possible, full row-major matrix otherwise"""
        if self.is_diagonal and np.all(np.abs(np.diag(self.J)) == 1.0):
            return [float(s) for s in np.diag(self.J)]
        return [float(v) for v in self.J.ravel()]

    def __eq__(self, other):
        return isinstance(other, KreinSignature) and np.array_equal(self.J, other.J)

    __hash__ = None


# ============================================================
# Spectral decomposition
# ============================================================

@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues sorted descending, orthonormal eigenvector columns"""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        Q = self.eigenvectors
        return (Q * self.eigenvalues) @ Q.T


def _check_dims(T: np.ndarray, J: KreinSignature, what: str = "T"):
    if T.ndim != 2 or T.shape[0] != J.dim:
        raise DimensionMismatchError(
            f"{what} has {T.shape[0] if T.ndim == 2 else T.shape} rows but the signature has dim {J.dim}"
        )


def symmetrize(S: np.ndarray) -> np.ndarray:
    return 0.5 * (S + S.T)


def indefinite_adjoint(T: np.ndarray, J_cod: KreinSignature) -> np.ndarray:
    """
    Adjoint from the Krein codomain to the Hilbert domain: T# = T^T J.

    Args:
        T: m x n matrix
        J_cod: signature of the codomain (dim m)

    Returns:
        n x m matrix T#
    """
    T = np.atleast_2d(np.asarray(T, dtype=float))
    _check_dims(T, J_cod)
    return T.T @ J_cod.J


def gram(T: np.ndarray, J: KreinSignature) -> np.ndarray:
    """Quadratic form matrix T^T J T, explicitly symmetrized"""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    return symmetrize(indefinite_adjoint(T, J) @ T)


def sym_eig(S: np.ndarray) -> SpectralDecomposition:
    """
    Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Raises:
        NotSymmetricError: if S deviates from symmetry by more than 1e-10 relative
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.shape[0] != S.shape[1]:
        raise DimensionMismatchError(f"Expected a square matrix, got {S.shape}")
    norm = np.linalg.norm(S)
    if np.linalg.norm(S - S.T) > 1e-10 * max(1.0, norm):
        raise NotSymmetricError("sym_eig called on a non-symmetric matrix")
    if S.shape[0] == 0:
        return SpectralDecomposition(np.zeros(0), np.zeros((0, 0)))
    w, Q = scipy.linalg.eigh(symmetrize(S))
    order = np.argsort(w)[::-1]
    return SpectralDecomposition(w[order], Q[:, order])


def lambda_min(S: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix"""
    S = symmetrize(np.atleast_2d(S))
    if S.shape[0] == 0:
        return np.inf
    return float(scipy.linalg.eigvalsh(S, subset_by_index=[0, 0])[0])


def psd_sqrt_pair(
    M: np.ndarray,
    tol: ToleranceConfig = DEFAULT_TOL,
    inverse: bool = True,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Symmetric square root M^{1/2} and, optionally, M^{-1/2}.

    Args:
        M: symmetric positive semidefinite matrix
        tol: tolerance policy
        inverse: also compute M^{-1/2} (requires M positive definite)

    Returns:
        (M_half, M_inv_half); M_inv_half is None when inverse is False

    Raises:
        NotPSDError: an eigenvalue is below -psd_tol*||M||
        SingularMatrixError: inverse requested on a rank-deficient M
    """
    spec = sym_eig(M)
    w, Q = spec.eigenvalues, spec.eigenvectors
    norm = float(np.max(np.abs(w))) if w.size else 0.0
    if w.size and w[-1] < -tol.psd_tol * norm:
        raise NotPSDError(f"Matrix is not PSD (lambda_min={w[-1]:.3e}, ||M||={norm:.3e})")
    root = np.sqrt(np.clip(w, 0.0, None))
    M_half = symmetrize((Q * root) @ Q.T)
    if not inverse:
        return M_half, None
    if not w.size or w[-1] <= tol.rank_tol * norm:
        raise SingularMatrixError(
            f"Inverse square root of a rank-deficient matrix (lambda_min={w[-1] if w.size else 0:.3e})"
        )
    M_inv_half = symmetrize((Q / root) @ Q.T)
    return M_half, M_inv_half


def moore_penrose(S: np.ndarray, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Pseudoinverse with rank decided by the relative cutoff rank_tol"""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.size == 0:
        return np.zeros((S.shape[1], S.shape[0]))
    return scipy.linalg.pinv(S, atol=0.0, rtol=tol.rank_tol)


def numerical_rank(S: np.ndarray, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if S.size == 0:
        return 0
    s = scipy.linalg.svdvals(S)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > tol.rank_tol * s[0]))


def nullspace_basis(S: np.ndarray, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """
    Orthonormal columns spanning N(S); shape (n, n - rank).
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    n = S.shape[1]
    if S.shape[0] == 0 or not np.any(S):
        return np.eye(n)
    return scipy.linalg.null_space(S, rcond=tol.rank_tol)


def orthogonal_complement(basis: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of span(basis)^perp in R^n"""
    if basis.size == 0 or basis.shape[1] == 0:
        return np.eye(n)
    return scipy.linalg.null_space(basis.T)


def subspace_intersection(*matrices: np.ndarray, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of N(S1) ∩ N(S2) ∩ ... via the stacked nullspace"""
    return nullspace_basis(np.vstack(matrices), tol)
