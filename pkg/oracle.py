"""
Brute-Force Oracle - independent checks for the QP1QEC solver

Chức năng:
- Sample the neutral cone C_V = {y : y^T B y = 0}
- Upper-bound the minimum by exact per-ray minimization over cone samples
- Find negative neutral directions (unboundedness certificates)
- Sweep lambda over the PSD interval
- Generate random solvable problems with a planted PSD interval
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
import scipy.stats

import config
from errors import InvalidProblemError, QP1QECError, SemidefiniteBError
from krein_linalg import (
    DEFAULT_TOL,
    KreinSignature,
    ToleranceConfig,
    moore_penrose,
    psd_sqrt_pair,
    sym_eig,
    symmetrize,
)
from pencil import IntervalKind, psd_interval
from solver import Problem, base_point

logger = logging.getLogger(__name__)

# Samples are drawn in blocks; block b always comes from rng([seed, b])
_BLOCK = 1024


@dataclass(frozen=True)
class SampleConfig:
    """
    Sampling budget.

    Attributes:
        seed: base seed
        count: number of cone samples
        refine_iters: compass-search rounds on the best candidates
        grid_max_exp: ray scalings reach 10**grid_max_exp
    """
    seed: int = config.DEFAULT_SEED
    count: int = config.DEFAULT_SAMPLE_COUNT
    refine_iters: int = config.DEFAULT_REFINE_ITERS
    grid_max_exp: float = config.RAY_GRID_MAX_EXP

    def __post_init__(self):
        if self.count < 1:
            raise QP1QECError(f"Sample count must be >= 1, got {self.count}")
        if self.refine_iters < 0:
            raise QP1QECError(f"refine_iters must be >= 0, got {self.refine_iters}")


# ============================================================
# Neutral cone
# ============================================================

class _Cone:
    """Eigen-coordinates of B split into positive, negative and zero parts"""

    def __init__(self, B: np.ndarray, tol: ToleranceConfig):
        spec = sym_eig(symmetrize(np.asarray(B, dtype=float)))
        self.w = spec.eigenvalues
        self.Q = spec.eigenvectors
        cut = tol.rank_tol * max(1.0, float(np.max(np.abs(self.w))))
        self.pos = self.w > cut
        self.neg = self.w < -cut
        if not (self.pos.any() and self.neg.any()):
            raise SemidefiniteBError("B has no eigenvalues of one sign; the neutral cone is a subspace")
        self.norm = float(np.max(np.abs(self.w)))

    def project(self, Z: np.ndarray) -> np.ndarray:
        """
        Rescale negative coordinates so that p = q; rows with p = 0 or q = 0
        come back as NaN.
        """
        Z = np.atleast_2d(np.array(Z, dtype=float))
        p = (Z[:, self.pos] ** 2) @ self.w[self.pos]
        q = (Z[:, self.neg] ** 2) @ -self.w[self.neg]
        ok = (p > 0) & (q > 0)
        factor = np.sqrt(np.where(ok, p, 1.0) / np.where(ok, q, 1.0))
        Z[:, self.neg] *= factor[:, None]
        Z[~ok] = np.nan
        return Z

    def to_space(self, Z: np.ndarray) -> np.ndarray:
        Y = Z @ self.Q.T
        return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def _draw_block(cone: _Cone, seed: int, block: int) -> np.ndarray:
    rng = np.random.default_rng([seed, block])
    Z = cone.project(rng.standard_normal((_BLOCK, cone.w.shape[0])))
    bad = np.isnan(Z[:, 0])
    while bad.any():
        Z[bad] = cone.project(rng.standard_normal((int(bad.sum()), cone.w.shape[0])))
        bad = np.isnan(Z[:, 0])
    return Z


def _sample_coords(cone: _Cone, sample: SampleConfig) -> np.ndarray:
    blocks = -(-sample.count // _BLOCK)
    Z = np.vstack([_draw_block(cone, sample.seed, b) for b in range(blocks)])
    return Z[: sample.count]


def sample_neutral_cone(
    B: np.ndarray,
    sample: SampleConfig = SampleConfig(),
    tol: ToleranceConfig = DEFAULT_TOL,
) -> np.ndarray:
    """
    Unit vectors y with y^T B y = 0, one per row.

    Deterministic in sample.seed; the first k rows do not depend on count.

    Raises:
        SemidefiniteBError: B is semidefinite
    """
    cone = _Cone(B, tol)
    return cone.to_space(_sample_coords(cone, sample))


# ============================================================
# Brute-force minimum
# ============================================================

@dataclass(frozen=True, eq=False)
class BruteMinResult:
    """Best sampled feasible value (an upper bound on the minimum)"""
    value: float
    point: np.ndarray
    direction: np.ndarray
    evaluated: int


def _ray_grid(max_exp: float) -> np.ndarray:
    mags = np.logspace(-max_exp, max_exp, config.RAY_GRID_SIZE)
    return np.concatenate([-mags[::-1], [0.0], mags])


def _ray_minimum(a: np.ndarray, b: np.ndarray, c: float, grid: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    min over t of a t^2 + 2 b t + c per ray: the exact vertex when a > 0
    plus the fixed grid.
    """
    values = a[:, None] * grid ** 2 + 2.0 * b[:, None] * grid + c
    idx = np.argmin(values, axis=1)
    best_t = grid[idx]
    best_v = values[np.arange(a.shape[0]), idx]

    convex = a > 0
    t_vertex = np.where(convex, -b / np.where(convex, a, 1.0), 0.0)
    v_vertex = c - np.where(convex, b ** 2 / np.where(convex, a, 1.0), 0.0)
    take = convex & (v_vertex < best_v)
    return np.where(take, v_vertex, best_v), np.where(take, t_vertex, best_t)


def brute_min(problem: Problem, sample: SampleConfig = SampleConfig()) -> BruteMinResult:
    """
    Best objective over x0 + t*y, y sampled from C_V and t optimized per ray.

    The best candidates are then refined by compass search in B's
    eigen-coordinates with cone re-projection.
    """
    tol = problem.tol
    x0 = base_point(problem.V, problem.z0, tol)
    B = problem.gram_pair().B
    cone = _Cone(B, tol)
    JK = problem.J_K.J
    r = problem.T @ x0 - problem.w0
    c = float(r @ JK @ r)
    grid = _ray_grid(sample.grid_max_exp)

    def evaluate(Z):
        Y = cone.to_space(Z)
        D = Y @ problem.T.T
        a = np.einsum("ij,jk,ik->i", D, JK, D)
        b = D @ (JK @ r)
        values, ts = _ray_minimum(a, b, c, grid)
        return values, ts, Y

    Z = _sample_coords(cone, sample)
    values, ts, Y = evaluate(Z)
    order = np.argsort(values, kind="stable")
    best = int(order[0])
    best_value, best_t, best_y = float(values[best]), float(ts[best]), Y[best]

    for idx in order[: min(5, order.shape[0])] if sample.refine_iters else []:
        z = Z[idx].copy()
        value = float(values[idx])
        step = 0.5 * float(np.linalg.norm(z))
        for _ in range(sample.refine_iters):
            trials = np.repeat(z[None, :], 2 * z.shape[0], axis=0)
            trials[np.arange(z.shape[0]), np.arange(z.shape[0])] += step
            trials[z.shape[0] + np.arange(z.shape[0]), np.arange(z.shape[0])] -= step
            trials = cone.project(trials)
            keep = ~np.isnan(trials[:, 0])
            if not keep.any():
                step *= 0.5
                continue
            tv, tt, ty = evaluate(trials[keep])
            j = int(np.argmin(tv))
            if tv[j] < value:
                z, value = trials[keep][j], float(tv[j])
                if value < best_value:
                    best_value, best_t, best_y = value, float(tt[j]), ty[j]
            else:
                step *= 0.5

    logger.debug("brute_min over %d samples: %.12g", sample.count, best_value)
    return BruteMinResult(best_value, x0 + best_t * best_y, best_y, sample.count)


def find_negative_neutral_direction(
    A: np.ndarray,
    B: np.ndarray,
    sample: SampleConfig = SampleConfig(),
    tol: ToleranceConfig = DEFAULT_TOL,
) -> Optional[np.ndarray]:
    """
    Unit y with y^T B y = 0 and y^T A y <= -psd_tol*scale, or None when the
    budget is exhausted.
    """
    A = symmetrize(np.asarray(A, dtype=float))
    B = symmetrize(np.asarray(B, dtype=float))
    scale = 1.0 + float(np.linalg.norm(A)) + float(np.linalg.norm(B))
    cone = _Cone(B, tol)

    def curvature(Z):
        Y = cone.to_space(Z)
        return np.einsum("ij,jk,ik->i", Y, A, Y), Y

    Z = _sample_coords(cone, sample)
    q, Y = curvature(Z)
    j = int(np.argmin(q))
    z, best_q, y = Z[j].copy(), float(q[j]), Y[j]

    step = 0.5 * float(np.linalg.norm(z))
    for _ in range(sample.refine_iters):
        if best_q <= -tol.psd_tol * scale and step < 1e-6:
            break
        n = z.shape[0]
        trials = np.repeat(z[None, :], 2 * n, axis=0)
        trials[np.arange(n), np.arange(n)] += step
        trials[n + np.arange(n), np.arange(n)] -= step
        trials = cone.project(trials)
        keep = ~np.isnan(trials[:, 0])
        if keep.any():
            tq, ty = curvature(trials[keep])
            k = int(np.argmin(tq))
            if tq[k] < best_q:
                z, best_q, y = trials[keep][k], float(tq[k]), ty[k]
                continue
        step *= 0.5

    neutral = abs(float(y @ B @ y)) <= 1e-10 * scale
    if best_q <= -tol.psd_tol * scale and neutral:
        logger.info("✓ Negative neutral direction: y^T A y = %.6g", best_q)
        return y
    logger.info("✗ No negative neutral direction within %d samples", sample.count)
    return None


# ============================================================
# Lambda sweep
# ============================================================

def lambda_sweep(problem: Problem, grid_size: int = 101) -> pd.DataFrame:
    """
    x_hat(lambda) = (A + lambda*B)^+ (T#w0 + lambda*V#z0) on a uniform grid
    over [rho-, rho+].

    Returns:
        DataFrame with columns lambda, x_hat, normal_residual, constraint
    """
    if grid_size < 1:
        raise QP1QECError(f"grid_size must be >= 1, got {grid_size}")
    tol = problem.tol
    pair = problem.gram_pair()
    interval = psd_interval(pair, tol)
    if interval.kind is IntervalKind.EMPTY:
        raise InvalidProblemError("lambda sweep needs a nonempty PSD interval")

    if grid_size == 1:
        grid = np.array([interval.midpoint])
    else:
        grid = np.linspace(interval.rho_minus, interval.rho_plus, grid_size)

    Tw = problem.T_adj @ problem.w0
    Vz = problem.V_adj @ problem.z0
    scale = problem.scale
    rows = []
    for lam in grid:
        H = pair.pencil(lam)
        rhs = Tw + lam * Vz
        x_hat = moore_penrose(H, tol) @ rhs
        residual = float(np.linalg.norm(H @ x_hat - rhs)) / (scale * (1.0 + np.linalg.norm(x_hat)))
        rows.append({
            "lambda": float(lam),
            "x_hat": x_hat,
            "normal_residual": residual,
            "constraint": problem.constraint(x_hat),
        })
    return pd.DataFrame(rows, columns=["lambda", "x_hat", "normal_residual", "constraint"])


# ============================================================
# Random problem generator
# ============================================================

def _factor(S: np.ndarray, tol: ToleranceConfig) -> Tuple[np.ndarray, KreinSignature]:
    """S = F^T J F with F of full row rank and J = diag(+-1)"""
    spec = sym_eig(S)
    w, Q = spec.eigenvalues, spec.eigenvectors
    keep = np.abs(w) > tol.rank_tol * max(1.0, float(np.max(np.abs(w))))
    F = np.sqrt(np.abs(w[keep]))[:, None] * Q[:, keep].T
    return F, KreinSignature.diagonal(np.sign(w[keep]))


def generate_problem(
    n: int,
    seed: int = config.DEFAULT_SEED,
    planted_interval: Optional[Tuple[float, float]] = None,
    deflation_dim: int = 0,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> Problem:
    """
    Random problem with a proper PSD interval and nontrivial N+ and N-.

    The spectrum of G is drawn inside [-1/kappa, 1/kappa] with both ends
    attained, then A and B are rebuilt from a random positive definite M and
    factored into T, J_K, V, J_E. deflation_dim adds a common nullspace.
    """
    core = n - deflation_dim
    if core < 2 or deflation_dim < 0:
        raise InvalidProblemError(f"need n - deflation_dim >= 2, got n={n}, deflation_dim={deflation_dim}")
    rng = np.random.default_rng(seed)

    if planted_interval is None:
        rho_minus = float(rng.uniform(-1.0, 1.0))
        rho_plus = rho_minus + float(rng.uniform(0.5, 2.0))
    else:
        rho_minus, rho_plus = map(float, planted_interval)
        if not rho_plus > rho_minus:
            raise InvalidProblemError(f"planted interval must satisfy rho- < rho+, got {planted_interval}")
    kappa = 0.5 * (rho_plus - rho_minus)
    rho_mid = 0.5 * (rho_plus + rho_minus)

    g = rng.choice([-1.0, 1.0], size=core) * rng.uniform(0.1, 0.9, size=core) / kappa
    g[0], g[1] = 1.0 / kappa, -1.0 / kappa
    U = scipy.stats.ortho_group.rvs(core, random_state=rng) if core > 1 else np.eye(1)
    G = symmetrize((U * g) @ U.T)

    X = rng.standard_normal((core, core))
    M = symmetrize(X @ X.T / core + np.eye(core))
    M_half, _ = psd_sqrt_pair(M, tol)
    B_core = symmetrize(M_half @ G @ M_half)
    A_core = symmetrize(M - rho_mid * B_core)

    P = scipy.stats.ortho_group.rvs(n, random_state=rng)[:, :core]
    A = symmetrize(P @ A_core @ P.T)
    B = symmetrize(P @ B_core @ P.T)

    T, J_K = _factor(A, tol)
    V, J_E = _factor(B, tol)
    w0 = rng.standard_normal(T.shape[0])
    z0 = rng.standard_normal(V.shape[0])
    logger.debug("generated n=%d interval=[%g, %g] mK=%d mE=%d", n, rho_minus, rho_plus,
                 T.shape[0], V.shape[0])
    return Problem(T, J_K, V, J_E, w0, z0, tol)
