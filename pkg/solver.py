"""
QP1QEC Solver - indefinite least squares with one quadratic equality constraint

    minimize   [Tx - w0, Tx - w0]_K
    subject to [Vx - z0, Vx - z0]_E = 0

Flow:
1. Deflate N(T) ∩ N(V) (solution sets are affine along it)
2. PSD interval of A + rho*B, A = T#T, B = V#V
3. Midpoint reduction to G and the secular equation in gamma = lambda - rho_mid
4. Assemble the solution set (singleton or ellipsoid family) and verify it
   against the normal equation (A + lambda*B)x = T#w0 + lambda*V#z0
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Any, Optional, Tuple, Union

import numpy as np
import scipy.optimize

import config
from errors import (
    DimensionMismatchError,
    InvalidProblemError,
    QP1QECError,
    RankDeficientVError,
    SecularDomainError,
    SemidefiniteBError,
    SingularMError,
)
from krein_linalg import (
    DEFAULT_TOL,
    KreinSignature,
    ToleranceConfig,
    indefinite_adjoint,
    lambda_min,
    moore_penrose,
    numerical_rank,
    orthogonal_complement,
    subspace_intersection,
    sym_eig,
    symmetrize,
)
from pencil import (
    GramPair,
    IntervalKind,
    PsdInterval,
    ReducedPencil,
    psd_interval,
    reduce_pencil,
)

logger = logging.getLogger(__name__)


# ============================================================
# Problem data
# ============================================================

@dataclass(frozen=True, eq=False)
class Problem:
    """
    A full QP1QEC instance.

    Attributes:
        T: mK x n matrix
        J_K: signature of K (dim mK)
        V: mE x n matrix, surjective
        J_E: signature of E (dim mE)
        w0: target in K
        z0: target in E
        tol: tolerance policy
    """
    T: np.ndarray
    J_K: KreinSignature
    V: np.ndarray
    J_E: KreinSignature
    w0: np.ndarray
    z0: np.ndarray
    tol: ToleranceConfig = DEFAULT_TOL

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.T, dtype=float))
        V = np.atleast_2d(np.asarray(self.V, dtype=float))
        w0 = np.asarray(self.w0, dtype=float).ravel()
        z0 = np.asarray(self.z0, dtype=float).ravel()
        if T.shape[0] != self.J_K.dim or w0.shape[0] != self.J_K.dim:
            raise DimensionMismatchError(
                f"T has {T.shape[0]} rows and w0 length {w0.shape[0]}, but dim K = {self.J_K.dim}"
            )
        if V.shape[0] != self.J_E.dim or z0.shape[0] != self.J_E.dim:
            raise DimensionMismatchError(
                f"V has {V.shape[0]} rows and z0 length {z0.shape[0]}, but dim E = {self.J_E.dim}"
            )
        if T.shape[1] != V.shape[1]:
            raise DimensionMismatchError(f"T has {T.shape[1]} columns, V has {V.shape[1]}")
        if numerical_rank(V, self.tol) != V.shape[0]:
            raise InvalidProblemError(f"V ({V.shape[0]}x{V.shape[1]}) is not surjective")
        for name, arr in (("T", T), ("V", V), ("w0", w0), ("z0", z0)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.T.shape[1]

    @property
    def mK(self) -> int:
        return self.T.shape[0]

    @property
    def mE(self) -> int:
        return self.V.shape[0]

    @property
    def T_adj(self) -> np.ndarray:
        return indefinite_adjoint(self.T, self.J_K)

    @property
    def V_adj(self) -> np.ndarray:
        return indefinite_adjoint(self.V, self.J_E)

    def gram_pair(self) -> GramPair:
        return GramPair.from_operators(self.T, self.J_K, self.V, self.J_E, self.tol)

    @property
    def scale(self) -> float:
        """1 + ||A||_F + ||B||_F + ||w0|| + ||z0||, the residual scale"""
        pair = self.gram_pair()
        return pair.scale + float(np.linalg.norm(self.w0)) + float(np.linalg.norm(self.z0))

    def objective(self, x: np.ndarray) -> float:
        r = self.T @ x - self.w0
        return float(r @ self.J_K.J @ r)

    def constraint(self, x: np.ndarray) -> float:
        r = self.V @ x - self.z0
        return float(r @ self.J_E.J @ r)


@dataclass(frozen=True, eq=False)
class DeflatedProblem:
    """
    Problem restricted to the complement of N(T) ∩ N(V).

    x = Q xi + null_basis c; T_r = T Q and V_r = V Q.
    """
    problem: Problem
    null_basis: np.ndarray
    Q: np.ndarray
    T_r: np.ndarray
    V_r: np.ndarray

    @property
    def null_dim(self) -> int:
        return self.null_basis.shape[1]

    def gram_pair(self) -> GramPair:
        p = self.problem
        return GramPair.from_operators(self.T_r, p.J_K, self.V_r, p.J_E, p.tol)

    def lift(self, xi: np.ndarray) -> np.ndarray:
        return self.Q @ xi


def deflate(problem: Problem) -> DeflatedProblem:
    """Factor out N(T) ∩ N(V); objective and constraint are constant along it"""
    null_basis = subspace_intersection(problem.T, problem.V, tol=problem.tol)
    Q = orthogonal_complement(null_basis, problem.n)
    if null_basis.shape[1]:
        logger.info("✓ Deflated common nullspace of dimension %d", null_basis.shape[1])
    return DeflatedProblem(problem, null_basis, Q, problem.T @ Q, problem.V @ Q)


def base_point(V: np.ndarray, z0: np.ndarray, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """
    Minimum-norm x0 with V x0 = z0.

    Raises:
        RankDeficientVError: V is not surjective
    """
    V = np.atleast_2d(np.asarray(V, dtype=float))
    z0 = np.asarray(z0, dtype=float).ravel()
    if numerical_rank(V, tol) != V.shape[0]:
        raise RankDeficientVError(f"V ({V.shape[0]}x{V.shape[1]}) is not surjective")
    x0 = moore_penrose(V, tol) @ z0
    residual = np.linalg.norm(V @ x0 - z0)
    if residual > tol.residual_tol * (1.0 + np.linalg.norm(z0)):
        raise RankDeficientVError(f"V x0 = z0 is not solvable (residual {residual:.3e})")
    return x0


# ============================================================
# Reduced right-hand side and secular equation
# ============================================================

@dataclass(frozen=True, eq=False)
class ReducedRhs:
    """
    u0 = M^{-1/2} T#(w0 - T x0) in deflated coordinates, and its split
    u0 = v+ + w+ + v- + w- + u0^0 over N+, D+, N-, D-, N(G).

    coords holds u0 in the eigenbasis of G.
    """
    x0: np.ndarray
    u0: np.ndarray
    coords: np.ndarray
    v_plus: np.ndarray
    w_plus: np.ndarray
    v_minus: np.ndarray
    w_minus: np.ndarray
    u0_zero: np.ndarray

    def components(self) -> Dict[str, np.ndarray]:
        return {
            "v_plus": self.v_plus,
            "w_plus": self.w_plus,
            "v_minus": self.v_minus,
            "w_minus": self.w_minus,
            "u0_zero": self.u0_zero,
        }


def reduced_rhs(
    deflated: DeflatedProblem,
    pencil: ReducedPencil,
    w0: Optional[np.ndarray] = None,
    z0: Optional[np.ndarray] = None,
) -> ReducedRhs:
    """Reduced right-hand side u0 and its five spectral components"""
    p = deflated.problem
    w0 = p.w0 if w0 is None else np.asarray(w0, dtype=float)
    z0 = p.z0 if z0 is None else np.asarray(z0, dtype=float)
    x0 = base_point(p.V, z0, p.tol)
    Tr_adj = indefinite_adjoint(deflated.T_r, p.J_K)
    u0 = pencil.M_inv_half @ (Tr_adj @ (w0 - p.T @ x0))
    coords = pencil.Q.T @ u0

    def part(mask):
        return pencil.Q[:, mask] @ coords[mask]

    return ReducedRhs(
        x0=x0,
        u0=u0,
        coords=coords,
        v_plus=part(pencil.mask_n_plus),
        w_plus=part(pencil.mask_d_plus),
        v_minus=part(pencil.mask_n_minus),
        w_minus=part(pencil.mask_d_minus),
        u0_zero=part(pencil.mask_zero),
    )


def secular_eval(pencil: ReducedPencil, rhs: ReducedRhs, tau: float) -> Tuple[float, float]:
    """
    g+(tau) = ||G+^{1/2}(I+ + tau G+)^{-1}(v+ + w+)||^2 and the matching g-(tau).

    The N-parts are evaluated in closed form, kappa*||v||^2/(kappa -/+ tau)^2.
    At tau = -kappa (resp. +kappa) the blocked N+ (resp. N-) term is dropped,
    which is the pseudoinverse limit.

    Raises:
        SecularDomainError: |tau| > kappa
    """
    kappa = pencil.kappa
    if abs(tau) > kappa * (1.0 + 4 * np.finfo(float).eps):
        raise SecularDomainError(f"tau={tau} outside [-{kappa}, {kappa}]")
    c2 = rhs.coords ** 2
    g = pencil.g

    vp2 = float(c2[pencil.mask_n_plus].sum())
    vm2 = float(c2[pencil.mask_n_minus].sum())
    n_plus = 0.0 if kappa + tau <= 0 else kappa * vp2 / (kappa + tau) ** 2
    n_minus = 0.0 if kappa - tau <= 0 else kappa * vm2 / (kappa - tau) ** 2

    gd = g[pencil.mask_d_plus]
    d_plus = float(np.sum(gd * c2[pencil.mask_d_plus] / (1.0 + tau * gd) ** 2))
    gd = g[pencil.mask_d_minus]
    d_minus = float(np.sum(-gd * c2[pencil.mask_d_minus] / (1.0 + tau * gd) ** 2))
    return n_plus + d_plus, n_minus + d_minus


class ThetaKind(Enum):
    SINGLETON = "singleton"
    SPHERE = "sphere"


@dataclass(frozen=True, eq=False)
class ThetaSet:
    """
    Reduced solution set {y in Q(G) : (I + gamma G) y = u0}.

    Singleton: {center}. Sphere: center + alpha * (unit sphere of span(sphere_basis)).
    """
    kind: ThetaKind
    center: np.ndarray
    gamma: float
    alpha: float = 0.0
    sphere_basis: Optional[np.ndarray] = None

    @property
    def is_sphere(self) -> bool:
        return self.kind is ThetaKind.SPHERE

    def member(self, unit: Optional[np.ndarray] = None) -> np.ndarray:
        """center + alpha * basis @ unit (first basis vector when unit is None)"""
        if not self.is_sphere or self.sphere_basis.shape[1] == 0 or self.alpha == 0.0:
            return self.center
        if unit is None:
            unit = np.zeros(self.sphere_basis.shape[1])
            unit[0] = 1.0
        return self.center + self.alpha * (self.sphere_basis @ unit)


@dataclass(frozen=True)
class NoTheta:
    """The boundary eigenspace needed on this side is trivial"""
    side: str


def _is_zero(v: np.ndarray, ref: float, tol: ToleranceConfig) -> bool:
    return float(np.linalg.norm(v)) <= tol.rank_tol * ref


def secular_solve(
    pencil: ReducedPencil,
    rhs: ReducedRhs,
    tol: ToleranceConfig = DEFAULT_TOL,
    bracket: Optional[Tuple[float, float]] = None,
) -> Union[ThetaSet, NoTheta]:
    """
    Find gamma and the reduced solution set Theta.

    h(tau) = g+(tau) - g-(tau) is strictly decreasing on (-kappa, kappa).
    If h stays nonnegative up to +kappa (only possible when v- = 0) Theta
    is a sphere in N- around the pseudoinverse solution; symmetrically at
    -kappa with N+. Otherwise the root is bracketed and bisected.

    Args:
        bracket: optional (a, b) inside [-kappa, kappa] with h(a) > 0 > h(b);
            ignored when it does not bracket a sign change
    """
    kappa = pencil.kappa
    u0 = rhs.u0
    ref = float(np.linalg.norm(u0))

    if ref == 0.0 or _is_zero(u0 - rhs.u0_zero, ref, tol):
        return ThetaSet(ThetaKind.SINGLETON, u0.copy(), 0.0)

    has_vp = not _is_zero(rhs.v_plus, ref, tol)
    has_vm = not _is_zero(rhs.v_minus, ref, tol)

    def h(tau):
        gp, gm = secular_eval(pencil, rhs, tau)
        return gp - gm

    h_hi = -np.inf if has_vm else h(kappa)
    h_lo = np.inf if has_vp else h(-kappa)

    if h_hi >= 0.0:
        return _boundary_theta(pencil, rhs, tol, side="minus", h_value=h_hi)
    if h_lo <= 0.0:
        return _boundary_theta(pencil, rhs, tol, side="plus", h_value=h_lo)

    def h_closed(tau):
        if tau <= -kappa:
            return h_lo
        if tau >= kappa:
            return h_hi
        return h(tau)

    a, b = -kappa, kappa
    if bracket is not None:
        ba, bb = max(bracket[0], -kappa), min(bracket[1], kappa)
        if ba < bb and h_closed(ba) > 0.0 > h_closed(bb):
            a, b = ba, bb
        else:
            logger.debug("Ignoring bracket %s: no sign change", bracket)

    gamma = scipy.optimize.bisect(
        h_closed, a, b, xtol=tol.root_tol * kappa, maxiter=tol.max_iter
    )
    y = pencil.Q @ (rhs.coords / (1.0 + gamma * pencil.g))
    logger.debug("Secular root gamma=%.15g", gamma)
    return ThetaSet(ThetaKind.SINGLETON, y, float(gamma))


def _boundary_theta(
    pencil: ReducedPencil,
    rhs: ReducedRhs,
    tol: ToleranceConfig,
    side: str,
    h_value: float,
) -> Union[ThetaSet, NoTheta]:
    """
    Theta at gamma = +kappa (side 'minus', sphere in N-) or gamma = -kappa
    (side 'plus', sphere in N+).
    """
    kappa = pencil.kappa
    if side == "minus":
        gamma, blocked = kappa, pencil.mask_n_minus
        alpha2 = kappa * h_value
    else:
        gamma, blocked = -kappa, pencil.mask_n_plus
        alpha2 = -kappa * h_value

    denom = 1.0 + gamma * pencil.g
    center_coords = np.where(blocked, 0.0, rhs.coords / np.where(blocked, 1.0, denom))
    center = pencil.Q @ center_coords
    alpha = float(np.sqrt(max(alpha2, 0.0)))
    basis = pencil.Q[:, blocked]

    if basis.shape[1] == 0 and alpha > tol.residual_tol * (1.0 + np.linalg.norm(center)):
        logger.warning("✗ No boundary eigenspace on side %s (alpha=%.3e)", side, alpha)
        return NoTheta(side)
    return ThetaSet(ThetaKind.SPHERE, center, float(gamma), alpha, basis)


# ============================================================
# Solution set
# ============================================================

@dataclass(frozen=True, eq=False)
class SolutionSet:
    """
    Minimizers of the original problem.

    Members: particular + ellipsoid_map @ c with ||c|| = radius (when a
    family), plus any combination of null_part columns.
    """
    particular: np.ndarray
    lam: float
    min_value: float
    null_part: np.ndarray
    ellipsoid_map: Optional[np.ndarray] = None
    radius: float = 0.0

    @property
    def is_family(self) -> bool:
        return self.ellipsoid_map is not None and self.ellipsoid_map.shape[1] > 0 and self.radius > 0.0

    @property
    def semi_axes(self) -> np.ndarray:
        """Semi-axes of the ellipsoid family in original coordinates"""
        if not self.is_family:
            return np.zeros(0)
        return self.radius * np.linalg.svd(self.ellipsoid_map, compute_uv=False)

    @property
    def physical_radius(self) -> float:
        axes = self.semi_axes
        return float(axes.max()) if axes.size else 0.0

    def member(self, unit: Optional[np.ndarray] = None, null_coeffs: Optional[np.ndarray] = None) -> np.ndarray:
        x = self.particular.copy()
        if self.is_family:
            if unit is None:
                unit = np.zeros(self.ellipsoid_map.shape[1])
                unit[0] = 1.0
            unit = np.asarray(unit, dtype=float)
            x = x + self.radius * (self.ellipsoid_map @ (unit / np.linalg.norm(unit)))
        if null_coeffs is not None and self.null_part.shape[1]:
            x = x + self.null_part @ np.asarray(null_coeffs, dtype=float)
        return x

    def sample_members(self, count: int, seed: int = config.DEFAULT_SEED) -> List[np.ndarray]:
        """Random members of the family (the particular point for singletons)"""
        if not self.is_family:
            return [self.particular.copy() for _ in range(count)]
        rng = np.random.default_rng(seed)
        units = rng.standard_normal((count, self.ellipsoid_map.shape[1]))
        return [self.member(u) for u in units]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "particular": self.particular.tolist(),
            "ellipsoid_map": None if not self.is_family else self.ellipsoid_map.tolist(),
            "radius": self.physical_radius,
            "reduced_radius": self.radius,
            "semi_axes": self.semi_axes.tolist(),
            "null_basis": self.null_part.T.tolist(),
        }


def assemble_solution(
    deflated: DeflatedProblem,
    pencil: ReducedPencil,
    rhs: ReducedRhs,
    theta: ThetaSet,
) -> SolutionSet:
    """Lift Theta back to x = x0 + Q M^{-1/2} y and evaluate the optimal value"""
    lift = deflated.Q @ pencil.M_inv_half
    particular = rhs.x0 + lift @ theta.center
    ellipsoid_map = None
    if theta.is_sphere and theta.sphere_basis.shape[1]:
        ellipsoid_map = lift @ theta.sphere_basis
    solution = SolutionSet(
        particular=particular,
        lam=float(theta.gamma + pencil.rho_mid),
        min_value=0.0,
        null_part=deflated.null_basis,
        ellipsoid_map=ellipsoid_map,
        radius=theta.alpha if ellipsoid_map is not None else 0.0,
    )
    value = deflated.problem.objective(solution.member())
    return SolutionSet(
        particular=solution.particular,
        lam=solution.lam,
        min_value=value,
        null_part=solution.null_part,
        ellipsoid_map=solution.ellipsoid_map,
        radius=solution.radius,
    )


# ============================================================
# Verification
# ============================================================

@dataclass(frozen=True)
class VerificationReport:
    """
    Optimality certificate checks (normal equation, feasibility, lambda in
    the PSD interval, PSD pencil, orthogonality). Residuals are relative.
    """
    normal_residual: float
    constraint_residual: float
    orthogonality_residual: float
    lambda_in_interval: bool
    pencil_psd: bool
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "normal_equation": self.normal_residual,
            "constraint": self.constraint_residual,
            "orthogonality": self.orthogonality_residual,
            "lambda_in_interval": self.lambda_in_interval,
            "pencil_psd": self.pencil_psd,
            "passed": self.passed,
        }


def verify_solution(
    problem: Problem,
    x: np.ndarray,
    lam: float,
    tol: Optional[ToleranceConfig] = None,
    interval: Optional[PsdInterval] = None,
) -> VerificationReport:
    """
    Check that x minimizes the problem with multiplier lam.

    Normal equation residual is relative to scale*(1 + ||x||), the constraint
    and orthogonality residuals to scale*(1 + ||x||)^2.
    """
    tol = tol or problem.tol
    x = np.asarray(x, dtype=float).ravel()
    pair = problem.gram_pair()
    scale = problem.scale
    size = 1.0 + float(np.linalg.norm(x))

    lhs = pair.pencil(lam) @ x
    rhs = problem.T_adj @ problem.w0 + lam * (problem.V_adj @ problem.z0)
    normal = float(np.linalg.norm(lhs - rhs)) / (scale * size)
    constraint = abs(problem.constraint(x)) / (scale * size ** 2)

    try:
        x0 = base_point(problem.V, problem.z0, tol)
        y0 = x - x0
        ortho_raw = (problem.T @ x - problem.w0) @ problem.J_K.J @ (problem.T @ y0)
        orthogonality = abs(float(ortho_raw)) / (scale * size ** 2)
    except RankDeficientVError:
        orthogonality = np.inf

    if interval is None:
        try:
            interval = psd_interval(pair, tol)
        except SemidefiniteBError:
            interval = PsdInterval(IntervalKind.EMPTY)
    slack = tol.root_tol * max(1.0, abs(lam)) * 10
    in_interval = interval.contains(lam, slack)
    psd = lambda_min(pair.pencil(lam)) >= -tol.psd_tol * scale

    passed = (
        normal <= tol.residual_tol
        and constraint <= tol.residual_tol
        and orthogonality <= tol.residual_tol
        and in_interval
        and psd
    )
    return VerificationReport(normal, constraint, orthogonality, bool(in_interval), bool(psd), bool(passed))


# ============================================================
# Outcome
# ============================================================

class SolveStatus(Enum):
    UNBOUNDED_BELOW = "UNBOUNDED_BELOW"
    SOLVED = "SOLVED"
    INFIMUM_NOT_ATTAINED = "INFIMUM_NOT_ATTAINED"
    DEGENERATE = "DEGENERATE"


class DegenerateStatus(Enum):
    VERIFIED_SOLUTION = "VERIFIED_SOLUTION"
    NO_VERIFIED_SOLUTION = "NO_VERIFIED_SOLUTION"


@dataclass(eq=False)
class SolveOutcome:
    """Status tag plus certificates and diagnostics"""
    status: SolveStatus
    interval: Optional[PsdInterval] = None
    solution: Optional[SolutionSet] = None
    certificate: Optional[np.ndarray] = None
    theta: Optional[ThetaSet] = None
    verification: Optional[VerificationReport] = None
    degenerate_status: Optional[DegenerateStatus] = None
    kappa: Optional[float] = None
    subspace_dims: Dict[str, int] = field(default_factory=dict)
    diagnostic: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "interval": None if self.interval is None else self.interval.to_dict(),
            "kappa": self.kappa,
            "lambda": None if self.solution is None else self.solution.lam,
            "min_value": None if self.solution is None else self.solution.min_value,
            "solution": None if self.solution is None else self.solution.to_dict(),
            "residuals": None if self.verification is None else self.verification.to_dict(),
            "subspace_dims": dict(self.subspace_dims),
            "degenerate_status": None if self.degenerate_status is None else self.degenerate_status.value,
            "certificate": None if self.certificate is None else self.certificate.tolist(),
            "diagnostic": self.diagnostic,
        }


def _find_certificate(pair: GramPair, tol: ToleranceConfig) -> Optional[np.ndarray]:
    from oracle import SampleConfig, find_negative_neutral_direction

    count = config.DEFAULT_SAMPLE_COUNT
    for attempt in range(config.CERTIFICATE_RETRIES):
        sample = SampleConfig(seed=config.DEFAULT_SEED + attempt, count=count,
                              refine_iters=config.DEFAULT_REFINE_ITERS)
        y = find_negative_neutral_direction(pair.A, pair.B, sample, tol)
        if y is not None:
            return y
        count *= 10
    return None


def solve(problem: Problem) -> SolveOutcome:
    """
    Full pipeline: deflate -> interval -> reduce -> secular -> assemble -> verify.

    Empty interval gives UNBOUNDED_BELOW with a negative neutral direction;
    Point interval or a singular midpoint matrix go through solve_degenerate.
    """
    tol = problem.tol
    deflated = deflate(problem)
    pair = deflated.gram_pair()
    interval = psd_interval(pair, tol)

    if interval.kind is IntervalKind.EMPTY:
        y = _find_certificate(pair, tol)
        certificate = None if y is None else deflated.lift(y)
        diagnostic = "negative neutral direction" if y is not None else \
            "certificate search exhausted; unboundedness follows from the empty interval"
        logger.info("✗ Problem is unbounded below")
        return SolveOutcome(SolveStatus.UNBOUNDED_BELOW, interval=interval,
                            certificate=certificate, diagnostic=diagnostic)

    if interval.kind is IntervalKind.POINT:
        return solve_degenerate(problem, interval, tol)

    try:
        pencil = reduce_pencil(pair, interval, tol)
    except SingularMError as e:
        logger.info("Midpoint matrix singular, using the degenerate path: %s", e)
        return solve_degenerate(problem, interval, tol)

    rhs = reduced_rhs(deflated, pencil)
    theta = secular_solve(pencil, rhs, tol)
    dims = pencil.subspace_dims()
    if isinstance(theta, NoTheta):
        return SolveOutcome(SolveStatus.INFIMUM_NOT_ATTAINED, interval=interval,
                            kappa=pencil.kappa, subspace_dims=dims,
                            diagnostic="; ".join(pencil.diagnostics)
                            or f"boundary eigenspace N_{theta.side} is trivial")

    solution = assemble_solution(deflated, pencil, rhs, theta)
    checks = [verify_solution(problem, x, solution.lam, tol, interval)
              for x in _verification_points(solution)]
    report = max(checks, key=lambda r: (not r.passed, r.normal_residual + r.constraint_residual))

    if not report.passed:
        logger.warning("✗ Reduced solution failed verification %s; trying the degenerate path",
                       report.to_dict())
        fallback = solve_degenerate(problem, interval, tol)
        fallback.kappa = pencil.kappa
        fallback.subspace_dims = dims
        fallback.diagnostic = "; ".join(pencil.diagnostics + (fallback.diagnostic,))
        return fallback

    logger.info("✓ Solved: lambda=%.12g min=%.12g family=%s", solution.lam, solution.min_value,
                solution.is_family)
    return SolveOutcome(SolveStatus.SOLVED, interval=interval, solution=solution, theta=theta,
                        verification=report, kappa=pencil.kappa, subspace_dims=dims,
                        diagnostic="; ".join(pencil.diagnostics))


def _verification_points(solution: SolutionSet) -> List[np.ndarray]:
    if not solution.is_family:
        return [solution.particular]
    k = solution.ellipsoid_map.shape[1]
    e = np.zeros(k)
    e[0] = 1.0
    return [solution.member(e), solution.member(-e)]


# ============================================================
# Degenerate path
# ============================================================

def _slice_root(P: np.ndarray, l: np.ndarray, q0: float, tol: ToleranceConfig) -> Optional[np.ndarray]:
    """
    A root of q(c) = c^T P c + 2 l^T c + q0, or None when q has no zero.
    """
    k = P.shape[0]
    if k == 0:
        return np.zeros(0) if abs(q0) <= tol.residual_tol * (1.0 + abs(q0)) else None
    spec = sym_eig(P)
    D, U = spec.eigenvalues, spec.eigenvectors
    lt = U.T @ l
    cut = tol.rank_tol * max(1.0, float(np.max(np.abs(D))))
    nz = np.abs(D) > cut
    lin = ~nz & (np.abs(lt) > cut)

    d = np.zeros(k)
    d[nz] = -lt[nz] / D[nz]            # complete the squares
    s = q0 - float(np.sum(lt[nz] ** 2 / D[nz]))

    if np.any(lin):
        # remaining linear term: 2 lt_j d_j + s = 0 along the strongest free direction
        j = int(np.argmax(np.where(lin, np.abs(lt), 0.0)))
        d[j] = -s / (2.0 * lt[j])
        return U @ d
    if abs(s) <= tol.residual_tol * (1.0 + abs(q0)):
        return U @ d
    opposite = nz & (np.sign(D) == -np.sign(s))
    if not np.any(opposite):
        return None
    j = int(np.argmax(np.where(opposite, np.abs(D), 0.0)))
    d[j] += np.sqrt(-s / D[j])
    return U @ d


def solve_degenerate(
    problem: Problem,
    interval: PsdInterval,
    tol: Optional[ToleranceConfig] = None,
) -> SolveOutcome:
    """
    Fixed-lambda search for a point satisfying the optimality conditions.

    For each candidate lambda: x_hat = (A + lam B)^+ (T#w0 + lam V#z0), then
    a root of the constraint along x_hat + K c, K = N(A + lam B). A verified
    point is a global minimizer; otherwise NO_VERIFIED_SOLUTION.
    """
    tol = tol or problem.tol
    pair = problem.gram_pair()
    scale = problem.scale

    if interval.kind is IntervalKind.POINT:
        candidates = [interval.rho_minus]
    else:
        grid = np.linspace(interval.rho_minus, interval.rho_plus, config.DEGENERATE_LAMBDA_GRID + 2)
        candidates = [interval.rho_minus, interval.midpoint, interval.rho_plus] + list(grid[1:-1])

    Tw = problem.T_adj @ problem.w0
    Vz = problem.V_adj @ problem.z0
    for lam in candidates:
        H = pair.pencil(lam)
        if lambda_min(H) < -tol.psd_tol * scale:
            continue
        b = Tw + lam * Vz
        # rank cut relative to the problem scale, not to ||H||
        spec = sym_eig(H)
        keep = spec.eigenvalues > tol.rank_tol * scale
        U = spec.eigenvectors
        x_hat = U[:, keep] @ ((U[:, keep].T @ b) / spec.eigenvalues[keep])
        if np.linalg.norm(H @ x_hat - b) > tol.residual_tol * scale * (1.0 + np.linalg.norm(x_hat)):
            logger.debug("lambda=%g: normal equation inconsistent", lam)
            continue
        K = U[:, ~keep]
        P = symmetrize(K.T @ pair.B @ K)
        l = K.T @ (pair.B @ x_hat - Vz)
        c = _slice_root(P, l, problem.constraint(x_hat), tol)
        if c is None:
            continue
        x = x_hat + K @ c
        report = verify_solution(problem, x, lam, tol, interval)
        if report.passed:
            null_part = subspace_intersection(problem.T, problem.V, tol=tol)
            solution = SolutionSet(x, float(lam), problem.objective(x), null_part)
            logger.info("✓ Degenerate path found a verified minimizer at lambda=%.12g", lam)
            return SolveOutcome(SolveStatus.DEGENERATE, interval=interval, solution=solution,
                                verification=report,
                                degenerate_status=DegenerateStatus.VERIFIED_SOLUTION,
                                diagnostic=f"verified at lambda={lam:.12g}")

    logger.info("✗ Degenerate path found no verified solution")
    return SolveOutcome(SolveStatus.DEGENERATE, interval=interval,
                        degenerate_status=DegenerateStatus.NO_VERIFIED_SOLUTION,
                        diagnostic="no candidate lambda produced a verified point")


# ============================================================
# Existence for all data
# ============================================================

@dataclass(frozen=True)
class ExistenceReport:
    interval_proper: bool
    m_positive_definite: bool
    n_plus_dim: int
    n_minus_dim: int
    verdict: bool
    note: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict,
            "interval_proper": self.interval_proper,
            "m_positive_definite": self.m_positive_definite,
            "N_plus_dim": self.n_plus_dim,
            "N_minus_dim": self.n_minus_dim,
            "note": self.note,
        }


def existence_for_all_data(problem: Problem) -> ExistenceReport:
    """
    True iff a minimizer exists for every (w0, z0): after deflation the
    interval is proper, M is positive definite, and N+ and N- are nontrivial.
    """
    deflated = deflate(problem)
    pair = deflated.gram_pair()
    try:
        interval = psd_interval(pair, problem.tol)
    except SemidefiniteBError:
        return ExistenceReport(False, False, 0, 0, False, "B is semidefinite")

    if interval.kind is not IntervalKind.INTERVAL:
        return ExistenceReport(False, False, 0, 0, False,
                               f"PSD interval is {interval.kind.name}, not a proper interval")
    try:
        pencil = reduce_pencil(pair, interval, problem.tol)
    except SingularMError:
        return ExistenceReport(True, False, 0, 0, False,
                               "A + rho*B is singular on the interior after deflation")
    dims = pencil.subspace_dims()
    verdict = dims["N_plus"] >= 1 and dims["N_minus"] >= 1
    note = (
        f"for generic data the solution set is a single point plus N(T) ∩ N(V) "
        f"(dimension {deflated.null_dim})"
    )
    return ExistenceReport(True, True, dims["N_plus"], dims["N_minus"], verdict, note)


# ============================================================
# Diagonal three-variable family
# ============================================================

def diagonal_problem(
    alpha: float = 4.0,
    beta: float = 0.5,
    rhs: Tuple[float, float, float] = (1.0, 1.0, 1.0),
    z0: Optional[np.ndarray] = None,
    extra_null_columns: int = 0,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> Problem:
    """
    Block-size-1 instance with A = diag(1, -beta, 1), B = diag(alpha, 1, -1).

    The PSD interval is [beta, 1]. With z0 = 0, rhs is T#w0 = (x1, x2, x3).
    extra_null_columns appends zero columns to T and V.
    """
    T = np.diag([1.0, np.sqrt(beta), 1.0])
    J_K = KreinSignature.diagonal([1.0, -1.0, 1.0])
    V = np.diag([np.sqrt(alpha), 1.0, 1.0])
    J_E = KreinSignature.diagonal([1.0, 1.0, -1.0])
    x1, x2, x3 = rhs
    w0 = np.array([x1, -x2 / np.sqrt(beta), x3])
    if extra_null_columns:
        T = np.hstack([T, np.zeros((3, extra_null_columns))])
        V = np.hstack([V, np.zeros((3, extra_null_columns))])
    z0 = np.zeros(3) if z0 is None else np.asarray(z0, dtype=float)
    return Problem(T, J_K, V, J_E, w0, z0, tol)


# ============================================================
# Solver facade
# ============================================================

class QP1QECSolver:
    """
    Stateful wrapper around the solve pipeline

    Chức năng:
    - build(): deflation, PSD interval and reduced pencil
    - solve(): full outcome
    - export_report(): JSON report on disk
    """

    def __init__(self, problem: Problem):
        self.problem = problem
        self.deflated: Optional[DeflatedProblem] = None
        self.interval: Optional[PsdInterval] = None
        self.pencil: Optional[ReducedPencil] = None
        self.outcome: Optional[SolveOutcome] = None

    def build(self) -> "QP1QECSolver":
        self.deflated = deflate(self.problem)
        pair = self.deflated.gram_pair()
        self.interval = psd_interval(pair, self.problem.tol)
        if self.interval.kind is IntervalKind.INTERVAL:
            try:
                self.pencil = reduce_pencil(pair, self.interval, self.problem.tol)
            except SingularMError:
                self.pencil = None
        return self

    def analyze(self) -> Dict[str, Any]:
        if self.deflated is None:
            self.build()
        return {
            "interval": self.interval.to_dict(),
            "kappa": None if self.pencil is None else self.pencil.kappa,
            "subspace_dims": {} if self.pencil is None else self.pencil.subspace_dims(),
            "existence_for_all_data": existence_for_all_data(self.problem).to_dict(),
        }

    def solve(self) -> SolveOutcome:
        self.outcome = solve(self.problem)
        return self.outcome

    def export_report(self, output_path: Union[str, Path]) -> Path:
        if self.outcome is None:
            raise QP1QECError("No outcome to export. Run solve() first.")
        from data_loader import ProblemLoader

        return ProblemLoader().export_report(self.outcome.to_dict(), output_path)
