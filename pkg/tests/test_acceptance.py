"""End-to-end checks on the diagonal three-variable family and on seeded random problems"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from oracle import SampleConfig, brute_min, generate_problem
from pencil import (
    IntervalKind,
    kernel_dims_check,
    objective_gradient,
    psd_interval,
    reduce_pencil,
)
from solver import (
    SolveStatus,
    deflate,
    reduced_rhs,
    secular_eval,
    secular_solve,
    solve,
    verify_solution,
)


def _family_extremes(solution):
    unit = np.zeros(solution.ellipsoid_map.shape[1])
    unit[0] = 1.0
    return [solution.member(unit), solution.member(-unit)]


@pytest.mark.parametrize("alpha,beta", [(4.0, 0.5), (9.0, 0.25)])
class TestExampleFamily:
    def test_interval(self, diag_factory, alpha, beta):
        interval = psd_interval(diag_factory(alpha, beta).gram_pair())
        assert interval.kind is IntervalKind.INTERVAL
        assert_allclose([interval.rho_minus, interval.rho_plus], [beta, 1.0], atol=1e-10)

    def test_right_end_sphere(self, diag_factory, alpha, beta):
        problem = diag_factory(alpha, beta, rhs=(1.0, 1.0, 0.0))
        solution = solve(problem).solution
        assert_allclose(solution.lam, 1.0, atol=1e-8)
        assert solution.is_family
        for x in _family_extremes(solution):
            assert verify_solution(problem, x, solution.lam).passed

    def test_interior_components(self, diag_factory, alpha, beta):
        problem = diag_factory(alpha, beta, rhs=(1.0, 1.0, 1.0))
        outcome = solve(problem)
        lam = outcome.solution.lam
        assert beta < lam < 1.0
        expected = [1.0 / (1.0 + alpha * lam), 1.0 / (lam - beta), 1.0 / (1.0 - lam)]
        assert_allclose(outcome.solution.particular, expected, rtol=1e-6)
        assert outcome.verification.normal_residual <= 1e-8
        assert outcome.verification.constraint_residual <= 1e-8

    def test_threshold_split(self, diag_factory, alpha, beta):
        # with rhs (gamma, 0, 1) the root sits at beta until gamma*sqrt(alpha) passes the threshold
        root = np.sqrt(alpha)
        below = solve(diag_factory(alpha, beta, rhs=(1.0, 0.0, 1.0))).solution
        above = solve(diag_factory(alpha, beta, rhs=(5.0, 0.0, 1.0))).solution
        assert_allclose(below.lam, beta, atol=1e-10)
        assert below.is_family
        assert_allclose(above.lam, (root * 5.0 - 1.0) / (root * 5.0 + alpha), atol=1e-10)
        assert not above.is_family

    def test_sphere_members_equal_valued(self, diag_factory, alpha, beta):
        problem = diag_factory(alpha, beta, rhs=(1.0, 0.0, 1.0))
        solution = solve(problem).solution
        values = [problem.objective(x) for x in solution.sample_members(2, seed=3)]
        assert_allclose(values[0], values[1], atol=1e-10)
        for x in solution.sample_members(2, seed=3):
            assert abs(problem.constraint(x)) <= 1e-10 * problem.scale


def test_interior_point(diag_factory):
    solution = solve(diag_factory(rhs=(5.0, 0.0, 1.0))).solution
    assert_allclose(solution.lam, 9.0 / 14.0, atol=1e-8)
    assert_allclose(solution.particular, [1.4, 0.0, 2.8], atol=1e-8)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(50))
def test_oracle_agrees(seed):
    problem = generate_problem(2 + seed % 5, seed=100 + seed)
    outcome = solve(problem)
    assert outcome.status is SolveStatus.SOLVED
    m_star = outcome.solution.min_value
    best = brute_min(problem, SampleConfig(seed=seed, count=20000, refine_iters=50))
    assert best.value >= m_star - 1e-6 * problem.scale
    assert best.value - m_star <= 1e-3 * (1.0 + abs(m_star))


@pytest.mark.slow
def test_reported_minimizers_satisfy_kkt():
    for seed in range(500):
        problem = generate_problem(2 + seed % 7, seed=3000 + seed)
        outcome = solve(problem)
        assert outcome.status is SolveStatus.SOLVED, seed
        solution = outcome.solution
        for x in [solution.particular] + solution.sample_members(3, seed=seed):
            report = verify_solution(problem, x, solution.lam)
            assert report.passed, (seed, report.to_dict())
            assert report.pencil_psd and report.lambda_in_interval


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(500))
def test_invariants_on_generated(seed):
    n = 2 + seed % 7
    problem = generate_problem(n, seed=1000 + seed)
    deflated = deflate(problem)
    pair = deflated.gram_pair()
    interval = psd_interval(pair)
    pencil = reduce_pencil(pair, interval)

    assert abs(np.max(pencil.g) * pencil.kappa - 1.0) <= 1e-8
    assert abs(np.min(pencil.g) * pencil.kappa + 1.0) <= 1e-8

    for lam in np.linspace(interval.rho_minus - 1.0, interval.rho_plus + 1.0, 7):
        assert np.linalg.norm(pencil.congruence(lam) - pair.pencil(lam)) <= 1e-9 * pair.scale

    rhs = reduced_rhs(deflated, pencil)
    taus = np.linspace(-1.0, 1.0, 102)[1:-1] * pencil.kappa
    h = np.array([np.subtract(*secular_eval(pencil, rhs, t)) for t in taus])
    assert np.all(np.diff(h) <= 0.0)

    first = secular_solve(pencil, rhs, problem.tol)
    again = secular_solve(pencil, rhs, problem.tol)
    assert abs(first.gamma - again.gamma) <= 10 * problem.tol.root_tol

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    grad = objective_gradient(problem.T, problem.J_K, problem.w0, x)
    step = 1e-6
    fd = np.array([(problem.objective(x + step * e) - problem.objective(x - step * e)) / (2 * step)
                   for e in np.eye(n)])
    assert np.linalg.norm(grad - fd) <= 1e-5 * (1.0 + np.linalg.norm(grad))


@pytest.mark.slow
def test_generic_problems_have_unique_minimizer():
    singletons = 0
    for seed in range(200):
        outcome = solve(generate_problem(2 + seed % 4, seed=5000 + seed))
        if outcome.status is SolveStatus.SOLVED:
            singletons += not outcome.solution.is_family
    assert singletons >= 195


@pytest.mark.parametrize("dim", [1, 2])
def test_planted_common_nullspace(dim):
    problem = generate_problem(3 + dim, seed=40 + dim, deflation_dim=dim)
    pair = problem.gram_pair()
    interval = psd_interval(pair)
    dims = kernel_dims_check(pair, interval.midpoint)
    assert dims["dim_pencil_kernel"] == dims["dim_common_kernel"] == dim

    outcome = solve(problem)
    assert outcome.status is SolveStatus.SOLVED
    solution = outcome.solution
    assert solution.null_part.shape[1] == dim
    x = solution.member()
    shifted = solution.member(null_coeffs=np.linspace(1.0, 2.0, dim))
    assert_allclose(problem.objective(shifted), problem.objective(x), atol=1e-10 * problem.scale)
    assert_allclose(problem.constraint(shifted), problem.constraint(x), atol=1e-10 * problem.scale)
