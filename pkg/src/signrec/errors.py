"""Exception hierarchy shared by all modules."""


class SignrecError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(SignrecError, ValueError):
    """An argument is outside its documented domain."""


class FormatError(SignrecError, ValueError):
    """A matrix, vector or config file could not be parsed."""


class PreconditionError(SignrecError):
    """The inputs are valid individually but violate a structural requirement (rank, kernel)."""


class ConvergenceError(SignrecError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, kkt_gap=float("nan")):
        super().__init__(message)
        self.kkt_gap = kkt_gap


class InfeasibleError(SignrecError):
    """A linear program has no feasible point."""


class UnboundedError(SignrecError):
    """A linear program is unbounded below."""


class NumericalError(SignrecError):
    """An assumption checked numerically (monotonicity, projector identity) failed."""


class CalibrationError(SignrecError):
    """A tuning target cannot be reached."""

    def __init__(self, message, max_achievable=float("nan")):
        super().__init__(message)
        self.max_achievable = max_achievable


class PlanError(SignrecError):
    """An experiment plan lacks a tuning value required by one of its estimators."""
