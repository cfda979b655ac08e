"""
Pencil Engine - PSD interval and reduced pencil of A + rho*B

A = T#T and B = V#V. The interval [rho-, rho+] is the set of rho making
A + rho*B positive semidefinite; at its midpoint the congruence

    A + lambda*B = M^{1/2} (I + (lambda - rho_mid) G) M^{1/2}

reduces the problem to the spectral structure of G.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Any, Tuple

import numpy as np
import scipy.optimize

import config
from errors import (
    DimensionMismatchError,
    NotPSDError,
    SemidefiniteBError,
    SingularMatrixError,
    SingularMError,
)
from krein_linalg import (
    DEFAULT_TOL,
    KreinSignature,
    ToleranceConfig,
    gram,
    indefinite_adjoint,
    lambda_min,
    nullspace_basis,
    orthogonal_complement,
    psd_sqrt_pair,
    subspace_intersection,
    sym_eig,
    symmetrize,
)

logger = logging.getLogger(__name__)


class IntervalKind(Enum):
    EMPTY = "empty"
    POINT = "point"
    INTERVAL = "interval"


class SignClass(Enum):
    POSITIVE = "P+(V)"
    NEUTRAL = "C_V"
    NEGATIVE = "P-(V)"


def _has_both_signs(S: np.ndarray, tol: ToleranceConfig) -> bool:
    w = sym_eig(S).eigenvalues
    if w.size == 0:
        return False
    band = tol.psd_tol * max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    return bool(w[0] > band and w[-1] < -band)


@dataclass(frozen=True, eq=False)
class GramPair:
    """
    The two quadratic forms of the problem: A = T#T, B = V#V.
    """
    A: np.ndarray
    B: np.ndarray
    tol: ToleranceConfig = DEFAULT_TOL
    A_indefinite: bool = field(init=False)
    B_indefinite: bool = field(init=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape != B.shape or A.shape[0] != A.shape[1]:
            raise DimensionMismatchError(f"A {A.shape} and B {B.shape} must be equal square shapes")
        A, B = symmetrize(A), symmetrize(B)
        A.flags.writeable = False
        B.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "A_indefinite", _has_both_signs(A, self.tol))
        object.__setattr__(self, "B_indefinite", _has_both_signs(B, self.tol))

    @classmethod
    def from_operators(
        cls,
        T: np.ndarray,
        J_K: KreinSignature,
        V: np.ndarray,
        J_E: KreinSignature,
        tol: ToleranceConfig = DEFAULT_TOL,
    ) -> "GramPair":
        return cls(gram(T, J_K), gram(V, J_E), tol)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def scale(self) -> float:
        return 1.0 + float(np.linalg.norm(self.A)) + float(np.linalg.norm(self.B))

    def pencil(self, rho: float) -> np.ndarray:
        return symmetrize(self.A + rho * self.B)

    def phi(self, rho: float) -> float:
        """lambda_min(A + rho*B), a concave function of rho"""
        return lambda_min(self.pencil(rho))


@dataclass(frozen=True)
class PsdInterval:
    """
    Set of rho for which A + rho*B is PSD.

    rho_minus == rho_plus for a Point; both NaN when Empty.
    phi_max / rho_star record the maximizer of lambda_min(A + rho*B).
    """
    kind: IntervalKind
    rho_minus: float = float("nan")
    rho_plus: float = float("nan")
    phi_max: float = float("nan")
    rho_star: float = float("nan")

    @property
    def is_empty(self) -> bool:
        return self.kind is IntervalKind.EMPTY

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.rho_minus + self.rho_plus)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.rho_plus - self.rho_minus)

    def contains(self, rho: float, slack: float = 0.0) -> bool:
        if self.is_empty:
            return False
        return self.rho_minus - slack <= rho <= self.rho_plus + slack

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.name,
            "rho_minus": None if self.is_empty else self.rho_minus,
            "rho_plus": None if self.is_empty else self.rho_plus,
        }


def _restricted_pair(pair: GramPair, tol: ToleranceConfig):
    """A and B restricted to the orthogonal complement of N(A) ∩ N(B)"""
    common = subspace_intersection(pair.A, pair.B, tol=tol)
    P = orthogonal_complement(common, pair.n)
    return symmetrize(P.T @ pair.A @ P), symmetrize(P.T @ pair.B @ P)


def psd_interval(pair: GramPair, tol: ToleranceConfig = DEFAULT_TOL) -> PsdInterval:
    """
    Compute [rho-, rho+] from phi(rho) = lambda_min(A + rho*B).

    phi is concave and tends to -inf on both sides when B is indefinite.
    It is maximized by a bounded golden-section/Brent search over a doubling
    bracket; the endpoints are the zeros of phi, located by bisection on
    each side of the maximizer. The common nullspace N(A) ∩ N(B) carries a
    zero eigenvalue for every rho and is projected out first.

    Raises:
        SemidefiniteBError: B has no eigenvalues of one sign
    """
    if not pair.B_indefinite:
        raise SemidefiniteBError("B = V#V is semidefinite; the PSD interval is not defined")

    A_c, B_c = _restricted_pair(pair, tol)
    threshold = tol.psd_tol * pair.scale

    def phi(rho):
        return lambda_min(A_c + rho * B_c)

    # Weyl: phi(rho) <= lambda_max(A) + rho*lambda_min(B) for rho >= 0, so phi < -1
    # beyond these bounds
    wa = sym_eig(A_c).eigenvalues
    wb = sym_eig(B_c).eigenvalues
    reach = max(float(wa[0]), 0.0) + 1.0
    weyl_hi = reach / abs(wb[-1])
    weyl_lo = -reach / wb[0]

    lo, hi = -1.0, 1.0
    for _ in range(tol.max_iter):
        if lo <= weyl_lo and hi >= weyl_hi and phi(lo) < -threshold and phi(hi) < -threshold:
            break
        lo, hi = 2.0 * lo, 2.0 * hi
    logger.debug("psd_interval bracket [%g, %g]", lo, hi)

    res = scipy.optimize.minimize_scalar(
        lambda r: -phi(r),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": tol.root_tol, "maxiter": 10 * tol.max_iter},
    )
    rho_star = float(res.x)
    # bounded search stops at ~sqrt(eps)*|rho| relative; polish in a shifted variable
    delta = 10.0 * (np.sqrt(np.finfo(float).eps) * max(1.0, abs(rho_star)) + tol.root_tol)
    polish = scipy.optimize.minimize_scalar(
        lambda s: -phi(rho_star + s),
        bounds=(-delta, delta),
        method="bounded",
        options={"xatol": tol.root_tol, "maxiter": 10 * tol.max_iter},
    )
    if -polish.fun >= phi(rho_star):
        rho_star = rho_star + float(polish.x)
    phi_star = phi(rho_star)

    if phi_star < -threshold:
        logger.info("✗ PSD interval empty (max lambda_min = %.3e)", phi_star)
        return PsdInterval(IntervalKind.EMPTY, phi_max=phi_star, rho_star=rho_star)
    if phi_star <= threshold:
        logger.info("✓ PSD interval is the point %.12g", rho_star)
        return PsdInterval(IntervalKind.POINT, rho_star, rho_star, phi_star, rho_star)

    rho_minus = scipy.optimize.bisect(phi, lo, rho_star, xtol=tol.root_tol, maxiter=tol.max_iter)
    rho_plus = scipy.optimize.bisect(phi, rho_star, hi, xtol=tol.root_tol, maxiter=tol.max_iter)

    width = rho_plus - rho_minus
    if width <= config.POINT_INTERVAL_REL_WIDTH * max(1.0, abs(rho_minus), abs(rho_plus)):
        mid = 0.5 * (rho_minus + rho_plus)
        return PsdInterval(IntervalKind.POINT, mid, mid, phi_star, rho_star)

    logger.info("✓ PSD interval [%.12g, %.12g]", rho_minus, rho_plus)
    return PsdInterval(IntervalKind.INTERVAL, float(rho_minus), float(rho_plus), phi_star, rho_star)


# ============================================================
# Reduced pencil
# ============================================================

@dataclass(frozen=True, eq=False)
class ReducedPencil:
    """
    Midpoint reduction M = A + rho_mid*B, G = M^{-1/2} B M^{-1/2}, and the
    spectral split of G.

    Bases are orthonormal columns. N_plus / N_minus are the eigenspaces of G
    at +1/kappa and -1/kappa; D_plus / D_minus their complements inside
    H_plus / H_minus; N_G is the kernel of G. diagnostics records a
    trivial N_plus or N_minus, which a proper interval rules out.
    """
    rho_mid: float
    kappa: float
    M: np.ndarray
    M_half: np.ndarray
    M_inv_half: np.ndarray
    G: np.ndarray
    g: np.ndarray             # eigenvalues of G, descending
    Q: np.ndarray             # eigenvectors of G
    mask_n_plus: np.ndarray
    mask_n_minus: np.ndarray
    mask_d_plus: np.ndarray
    mask_d_minus: np.ndarray
    mask_zero: np.ndarray
    diagnostics: Tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.G.shape[0]

    @property
    def rho_minus(self) -> float:
        return self.rho_mid - self.kappa

    @property
    def rho_plus(self) -> float:
        return self.rho_mid + self.kappa

    @property
    def H_plus(self) -> np.ndarray:
        return self.Q[:, self.mask_n_plus | self.mask_d_plus]

    @property
    def H_minus(self) -> np.ndarray:
        return self.Q[:, self.mask_n_minus | self.mask_d_minus]

    @property
    def N_G(self) -> np.ndarray:
        return self.Q[:, self.mask_zero]

    @property
    def N_plus(self) -> np.ndarray:
        return self.Q[:, self.mask_n_plus]

    @property
    def N_minus(self) -> np.ndarray:
        return self.Q[:, self.mask_n_minus]

    @property
    def D_plus(self) -> np.ndarray:
        return self.Q[:, self.mask_d_plus]

    @property
    def D_minus(self) -> np.ndarray:
        return self.Q[:, self.mask_d_minus]

    def subspace_dims(self) -> Dict[str, int]:
        return {
            "N_plus": int(self.mask_n_plus.sum()),
            "N_minus": int(self.mask_n_minus.sum()),
            "N_G": int(self.mask_zero.sum()),
            "D_plus": int(self.mask_d_plus.sum()),
            "D_minus": int(self.mask_d_minus.sum()),
        }

    def congruence(self, lam: float) -> np.ndarray:
        """M^{1/2} (I + (lam - rho_mid) G) M^{1/2}, which equals A + lam*B"""
        inner = np.eye(self.n) + (lam - self.rho_mid) * self.G
        return symmetrize(self.M_half @ inner @ self.M_half)


def reduce_pencil(
    pair: GramPair,
    interval: PsdInterval,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> ReducedPencil:
    """
    Build the reduced pencil at the interval midpoint.

    Raises:
        SingularMError: interval is not a proper Interval or M is not
            positive definite
    """
    if interval.kind is not IntervalKind.INTERVAL:
        raise SingularMError(f"Reduction needs a proper interval, got {interval.kind.name}")

    rho_mid = interval.midpoint
    kappa = interval.half_width
    M = pair.pencil(rho_mid)
    try:
        M_half, M_inv_half = psd_sqrt_pair(M, tol)
    except (NotPSDError, SingularMatrixError) as e:
        raise SingularMError(f"M = A + {rho_mid:.6g}B is not positive definite: {e}") from e

    G = symmetrize(M_inv_half @ pair.B @ M_inv_half)
    spec = sym_eig(G)
    g, Q = spec.eigenvalues, spec.eigenvectors

    inv_k = 1.0 / kappa
    band = config.EIGENSPACE_BAND * inv_k
    mask_n_plus = np.abs(g - inv_k) <= band
    mask_n_minus = np.abs(g + inv_k) <= band
    mask_zero = np.abs(g) <= tol.rank_tol * inv_k
    mask_d_plus = (g > 0) & ~mask_n_plus & ~mask_zero
    mask_d_minus = (g < 0) & ~mask_n_minus & ~mask_zero

    diagnostics = []
    for side, mask in (("plus", mask_n_plus), ("minus", mask_n_minus)):
        if not mask.any():
            diagnostics.append(f"N_{side} is trivial: extreme eigenvalues {g[0]:.6g}, {g[-1]:.6g} "
                               f"vs +-{inv_k:.6g}")

    reduced = ReducedPencil(
        rho_mid=rho_mid,
        kappa=kappa,
        M=M,
        M_half=M_half,
        M_inv_half=M_inv_half,
        G=G,
        g=g,
        Q=Q,
        mask_n_plus=mask_n_plus,
        mask_n_minus=mask_n_minus,
        mask_d_plus=mask_d_plus,
        mask_d_minus=mask_d_minus,
        mask_zero=mask_zero,
        diagnostics=tuple(diagnostics),
    )
    for message in diagnostics:
        logger.warning("✗ Boundary eigenspace check failed: %s", message)
    logger.debug("Reduced pencil rho_mid=%g kappa=%g dims=%s", rho_mid, kappa, reduced.subspace_dims())
    return reduced


# ============================================================
# Objective / constraint evaluation
# ============================================================

@dataclass(frozen=True)
class FormValues:
    objective: float
    constraint: float
    sign_class: SignClass


def _as_vec(x, length: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.shape[0] != length:
        raise DimensionMismatchError(f"{name} has length {x.shape[0]}, expected {length}")
    return x


def evaluate_forms(
    T: np.ndarray,
    J_K: KreinSignature,
    V: np.ndarray,
    J_E: KreinSignature,
    w0: np.ndarray,
    z0: np.ndarray,
    x: np.ndarray,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> FormValues:
    """
    Objective [Tx - w0, Tx - w0]_K, constraint [Vx - z0, Vx - z0]_E and the
    class of x with respect to the form x^T B x.
    """
    T = np.atleast_2d(T)
    V = np.atleast_2d(V)
    if T.shape[1] != V.shape[1]:
        raise DimensionMismatchError(f"T has {T.shape[1]} columns, V has {V.shape[1]}")
    x = _as_vec(x, T.shape[1], "x")
    rK = T @ x - _as_vec(w0, J_K.dim, "w0")
    rE = V @ x - _as_vec(z0, J_E.dim, "z0")
    objective = float(rK @ J_K.J @ rK)
    constraint = float(rE @ J_E.J @ rE)

    B = gram(V, J_E)
    q = float(x @ B @ x)
    band = tol.psd_tol * float(np.linalg.norm(B, 2)) * float(x @ x)
    if q > band:
        sign = SignClass.POSITIVE
    elif q < -band:
        sign = SignClass.NEGATIVE
    else:
        sign = SignClass.NEUTRAL
    return FormValues(objective, constraint, sign)


def objective_gradient(T: np.ndarray, J_K: KreinSignature, w0: np.ndarray, x: np.ndarray) -> np.ndarray:
    """d/dx [Tx - w0, Tx - w0]_K = 2 T#(Tx - w0)"""
    return 2.0 * indefinite_adjoint(T, J_K) @ (np.atleast_2d(T) @ x - w0)


def constraint_gradient(V: np.ndarray, J_E: KreinSignature, z0: np.ndarray, x: np.ndarray) -> np.ndarray:
    """d/dx [Vx - z0, Vx - z0]_E = 2 V#(Vx - z0)"""
    return 2.0 * indefinite_adjoint(V, J_E) @ (np.atleast_2d(V) @ x - z0)


def kernel_dims_check(pair: GramPair, rho: float, tol: ToleranceConfig = DEFAULT_TOL) -> Dict[str, int]:
    """
    Dimensions of N(A + rho*B) and N(A) ∩ N(B); equal for interior rho.
    """
    return {
        "dim_pencil_kernel": int(nullspace_basis(pair.pencil(rho), tol).shape[1]),
        "dim_common_kernel": int(subspace_intersection(pair.A, pair.B, tol=tol).shape[1]),
    }
