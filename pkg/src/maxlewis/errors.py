"""Exception hierarchy shared by all modules."""


class MaxLewisError(Exception):
    """Base class for every error raised by this package."""


class NonFinite(MaxLewisError, ValueError):
    pass


class RankDeficient(MaxLewisError, ValueError):
    pass


class NonPositiveWeight(MaxLewisError, ValueError):
    pass


class NotConverged(MaxLewisError, RuntimeError):
    """Iteration stopped before reaching its tolerance.

    ``residual`` holds the last measured residual and ``result`` the best
    iterate found, when one is available.
    """

    def __init__(self, message, residual=None, result=None):
        super().__init__(message)
        self.residual = residual
        self.result = result


class MismatchedLengths(MaxLewisError, ValueError):
    pass


class MixedExponents(MaxLewisError, ValueError):
    pass


class AllZeroWeights(MaxLewisError, ValueError):
    pass


class BudgetExceedsSupport(MaxLewisError, ValueError):
    pass


class CapExceeded(MaxLewisError, RuntimeError):
    """Draw cap reached before the distinct budget was met; ``plan`` is partial."""

    def __init__(self, message, plan=None):
        super().__init__(message)
        self.plan = plan


class IndexOutOfRange(MaxLewisError, IndexError):
    pass


class QueryBudgetInfeasible(MaxLewisError, ValueError):
    pass


class EmptyLabels(MaxLewisError, ValueError):
    pass


class AbsentClass(MaxLewisError, ValueError):
    pass


class ConfigError(MaxLewisError, ValueError):
    pass


class DegenerateConstraint(UserWarning):
    """Warning: the constraint set collapsed to {0} because the sampled labels are all zero."""
