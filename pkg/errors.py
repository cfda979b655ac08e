"""
Exception hierarchy for the QP1QEC solver.

Library code raises these; run_solver.py maps them to exit codes.
"""


class QP1QECError(ValueError):
    """Base class for every solver error"""


class DimensionMismatchError(QP1QECError):
    pass


class NotSymmetricError(QP1QECError):
    pass


class NotPSDError(QP1QECError):
    pass


class SingularMatrixError(QP1QECError):
    pass


class SingularMError(SingularMatrixError):
    """M = A + rho_mid*B is not positive definite; the reduction is unavailable"""


class SemidefiniteBError(QP1QECError):
    """B = V#V has no eigenvalues of one sign; the PSD interval degenerates"""


class InvalidProblemError(QP1QECError):
    pass


class RankDeficientVError(InvalidProblemError):
    """V is not surjective"""


class SecularDomainError(QP1QECError):
    pass


class ProblemFileError(QP1QECError):
    """Malformed problem or vector file"""
