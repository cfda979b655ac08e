"""
Command-line runner for the QP1QEC solver

Usage:
    python run_solver.py analyze problem.json
    python run_solver.py solve problem.json
    python run_solver.py verify problem.json --x x.json --lambda 0.5
    python run_solver.py generate --n 5 --seed 7 [--planted-interval -1 2]
    python run_solver.py splines problem.json
    python run_solver.py sweep problem.json --grid 101

Reports go to stdout as JSON (sweep: CSV); diagnostics go to stderr.
"""

import argparse
import json
import logging
import sys
import time
from typing import Dict, Any, List, Optional

import config
from data_loader import ProblemLoader
from errors import DimensionMismatchError, QP1QECError, SemidefiniteBError
from oracle import generate_problem, lambda_sweep
from solver import (
    DegenerateStatus,
    QP1QECSolver,
    SolveOutcome,
    SolveStatus,
    existence_for_all_data,
    solve,
    verify_solution,
)
from splines import build_problem, check_T_surjective

logger = logging.getLogger(__name__)


def _exit_code(outcome: SolveOutcome) -> int:
    if outcome.status is SolveStatus.SOLVED:
        return config.EXIT_OK
    if outcome.status is SolveStatus.UNBOUNDED_BELOW:
        return config.EXIT_UNBOUNDED
    if outcome.status is SolveStatus.INFIMUM_NOT_ATTAINED:
        return config.EXIT_NOT_ATTAINED
    if outcome.degenerate_status is DegenerateStatus.VERIFIED_SOLUTION:
        return config.EXIT_OK
    return config.EXIT_DEGENERATE


def _emit(report: Dict[str, Any]) -> None:
    sys.stdout.write(ProblemLoader.to_json(report))
    sys.stdout.write("\n")


def _tolerances(args) -> Dict[str, Any]:
    return {
        "rank_tol": args.rank_tol,
        "psd_tol": args.psd_tol,
        "root_tol": args.root_tol,
        "residual_tol": args.residual_tol,
        "max_iter": args.max_iter,
    }


def cmd_analyze(args, loader: ProblemLoader) -> int:
    problem = loader.load_problem(args.file, **_tolerances(args))
    started = time.perf_counter()
    report = QP1QECSolver(problem).analyze()
    report["timings_ms"] = {"analyze": 1000.0 * (time.perf_counter() - started)}
    _emit(report)
    return config.EXIT_OK


def _solve_report(problem) -> int:
    started = time.perf_counter()
    outcome = solve(problem)
    report = outcome.to_dict()
    report["existence_for_all_data"] = existence_for_all_data(problem).to_dict()
    report["timings_ms"] = {"solve": 1000.0 * (time.perf_counter() - started)}
    _emit(report)
    return _exit_code(outcome)


def cmd_solve(args, loader: ProblemLoader) -> int:
    return _solve_report(loader.load_problem(args.file, **_tolerances(args)))


def cmd_verify(args, loader: ProblemLoader) -> int:
    problem = loader.load_problem(args.file, **_tolerances(args))
    x = loader.load_vector(args.x, length=problem.n)
    report = verify_solution(problem, x, args.lam)
    _emit({"lambda": args.lam, "residuals": report.to_dict(), "passed": report.passed})
    return config.EXIT_OK if report.passed else config.EXIT_VERIFY_FAILED


def cmd_generate(args, loader: ProblemLoader) -> int:
    problem = generate_problem(
        args.n,
        seed=args.seed,
        planted_interval=None if args.planted_interval is None else tuple(args.planted_interval),
        deflation_dim=args.deflation_dim,
    )
    doc = loader.dump_problem(problem, path=args.output)
    _emit(doc)
    return config.EXIT_OK


def cmd_splines(args, loader: ProblemLoader) -> int:
    parsed = loader.load(args.file, **_tolerances(args))
    if parsed.splines is None:
        raise QP1QECError(f"{args.file} has no splines object")
    msp = parsed.splines
    surjectivity = check_T_surjective(msp.U, msp.W, parsed.tol)
    if not surjectivity.surjective:
        _emit({"status": None, "surjectivity": surjectivity.to_dict(),
               "diagnostic": "H != N(U) + N(W): the stacked operator is not onto"})
        return config.EXIT_NOT_SURJECTIVE
    return _solve_report(build_problem(msp))


def cmd_sweep(args, loader: ProblemLoader) -> int:
    problem = loader.load_problem(args.file, **_tolerances(args))
    table = lambda_sweep(problem, args.grid)
    table["x_hat"] = table["x_hat"].map(lambda v: json.dumps([float(c) for c in v]))
    sys.stdout.write(table.to_csv(index=False, float_format="%.17g"))
    return config.EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging on stderr")
    common.add_argument("--data-dir", type=str, default=str(config.DATA_DIR),
                        help="Directory searched for relative problem paths")
    common.add_argument("--rank-tol", type=float, default=None)
    common.add_argument("--psd-tol", type=float, default=None)
    common.add_argument("--root-tol", type=float, default=None)
    common.add_argument("--residual-tol", type=float, default=None)
    common.add_argument("--max-iter", type=int, default=None)

    parser = argparse.ArgumentParser(description="Indefinite least squares with one quadratic equality constraint")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common], help="PSD interval, kappa and subspace dimensions")
    p.add_argument("file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("solve", parents=[common], help="Full solve report")
    p.add_argument("file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", parents=[common], help="Check a candidate minimizer")
    p.add_argument("file")
    p.add_argument("--x", required=True, help="JSON vector file")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", parents=[common], help="Random problem with a nonempty PSD interval")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    p.add_argument("--planted-interval", type=float, nargs=2, metavar=("RHO_MINUS", "RHO_PLUS"))
    p.add_argument("--deflation-dim", type=int, default=0)
    p.add_argument("--output", type=str, default=None, help="Also write the problem to this file")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("splines", parents=[common], help="Solve the mixed splines form")
    p.add_argument("file")
    p.set_defaults(func=cmd_splines)

    p = sub.add_parser("sweep", parents=[common], help="Lambda sweep over the PSD interval as CSV")
    p.add_argument("file")
    p.add_argument("--grid", type=int, default=101)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    loader = ProblemLoader(args.data_dir)
    try:
        return args.func(args, loader)
    except DimensionMismatchError as e:
        print(f"ERROR: dimension mismatch: {e}", file=sys.stderr)
        return config.EXIT_DIMENSION
    except SemidefiniteBError as e:
        print(f"ERROR: hypothesis violated, V#V must be indefinite: {e}", file=sys.stderr)
        return config.EXIT_MALFORMED
    except QP1QECError as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return config.EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
