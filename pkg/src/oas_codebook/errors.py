"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates an operation's precondition."""


class SingularMatrixError(ArithmeticError):
    """A matrix is too ill-conditioned to invert reliably.

    ``condition`` carries the estimated 2-norm condition number. The OAS
    engine fills in ``subframe`` and ``source_indices`` before re-raising so
    a failed trial can be traced to the codewords that caused it.
    """

    def __init__(self, message, condition=float("inf"), subframe=None, source_indices=None):
        super().__init__(message)
        self.condition = condition
        self.subframe = subframe
        self.source_indices = source_indices


class BudgetExceededError(RuntimeError):
    """Exhaustive codeword search would enumerate too many subsets."""


class NumericalError(ArithmeticError):
    """Quadrature or another numerical routine failed to converge."""
