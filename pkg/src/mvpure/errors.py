"""Exception hierarchy shared by every mvpure module.

Two families matter to callers: usage errors (bad arguments, bad files,
infeasible dimensions) and numerical errors (positive-definiteness or
convergence failures).  The CLI maps them to exit codes 2 and 3
respectively; the HTTP service maps them to 400 and 409.
"""


class MvpureError(Exception):
    """Base class for all mvpure errors."""


class UsageError(MvpureError):
    """Inputs violate a documented precondition (caller mistake)."""


class NumericalError(MvpureError):
    """A numerical guarantee failed (not positive definite, no convergence)."""


# -- usage errors -----------------------------------------------------------

class RankOutOfRange(UsageError):
    pass


class DimensionMismatch(UsageError):
    pass


class InfeasibleDimensions(UsageError):
    pass


class NegativeGamma(UsageError):
    pass


class EmptyWindow(UsageError):
    pass


class TooFewSamples(UsageError):
    pass


class ComboLimitExceeded(UsageError):
    pass


class SourceSetMismatch(UsageError):
    pass


# -- numerical errors -------------------------------------------------------

class NotSymmetric(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class NotPositiveDefinite(NumericalError):
    def __init__(self, message, smallest_eigenvalue=None):
        if smallest_eigenvalue is not None:
            message = f"{message} (smallest eigenvalue {smallest_eigenvalue:.6e})"
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class DegenerateGap(NumericalError):
    """Eigenvalue gap at the requested rank is too small; the rank-r
    principal subspace (and hence the projector) is ill-defined."""


class NotSimilarizable(NumericalError):
    """Supplied symmetrizing factor does not reduce the matrix to a
    symmetric one (or is not positive definite)."""


class RankDeficientSubset(NumericalError):
    """Selected lead-field columns are (numerically) linearly dependent."""


class QNotPositiveDefinite(NumericalError):
    """Residual source covariance S^-1 - G^-1 of a candidate set is not
    positive definite; the candidate cannot carry an activity index."""


class AllCandidatesDegenerate(NumericalError):
    """Every remaining candidate source failed kernel construction."""


class InvariantViolation(NumericalError):
    """An internal numerical consistency check failed."""
