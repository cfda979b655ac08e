"""
Configuration file for the QP1QEC solver
Centralized tolerances, sampling budgets and CLI settings
"""

from pathlib import Path

# Base directories
BASE_DIR = Path(__file__).parent
DATA_DIR = BASE_DIR / "data"

# Numerical tolerances (see ToleranceConfig in krein_linalg.py)
DEFAULT_RANK_TOL = 1e-10      # relative singular-value cutoff
DEFAULT_PSD_TOL = 1e-9        # eigenvalue nonnegativity slack, relative
DEFAULT_ROOT_TOL = 1e-12      # bisection width
DEFAULT_RESIDUAL_TOL = 1e-8   # verification slack, relative
DEFAULT_MAX_ITER = 200        # bisection / refinement cap

# Environment override for residual_tol (decimal string)
TOLERANCE_ENV = "QP1QEC_TOLERANCE"

# Pencil settings
POINT_INTERVAL_REL_WIDTH = 1e-8   # below this width [rho-, rho+] is a point
EIGENSPACE_BAND = 1e-7            # |g -/+ 1/kappa| <= band / kappa  =>  N+/-

# Degenerate path: interior lambda grid (endpoints and midpoint added)
DEGENERATE_LAMBDA_GRID = 11

# Oracle settings
DEFAULT_SEED = 20240607
DEFAULT_SAMPLE_COUNT = 20000
DEFAULT_REFINE_ITERS = 50
RAY_GRID_SIZE = 16                # log grid of ray scalings per cone sample
RAY_GRID_MAX_EXP = 4              # scalings up to 10**RAY_GRID_MAX_EXP
CERTIFICATE_RETRIES = 3           # budget x10 per retry

# CLI exit codes (mirror SolveStatus)
EXIT_OK = 0
EXIT_UNBOUNDED = 2
EXIT_NOT_ATTAINED = 3
EXIT_VERIFY_FAILED = 3
EXIT_DEGENERATE = 4
EXIT_NOT_SURJECTIVE = 5
EXIT_MALFORMED = 64
EXIT_DIMENSION = 65
