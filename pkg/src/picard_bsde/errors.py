"""Exception hierarchy shared by the solver modules."""


class BSDEError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(BSDEError, ValueError):
    """An argument violates a documented precondition."""


class DataError(BSDEError, ValueError):
    """Input data contains non-finite values."""


class DegenerateFitError(BSDEError):
    """The regression design matrix carries no information."""


class ModelKindError(BSDEError, TypeError):
    """An operation was requested on a model that does not support it."""


class SampleError(BSDEError, ArithmeticError):
    """A Monte-Carlo sample produced a non-finite value."""


class TaskFailure(BSDEError):
    """A farmed task raised; carries the offending key."""

    def __init__(self, key, cause):
        self.key = key
        self.cause = cause
        super().__init__(f"task {key!r} failed: {cause!r}")
