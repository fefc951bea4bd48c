"""Exception types raised across the package."""


class FraflowError(Exception):
    """Base class for all package errors."""


class PreconditionError(FraflowError, ValueError):
    """An operation was called with inputs outside its domain."""


class DimensionMismatchError(PreconditionError):
    pass


class MittagLefflerError(FraflowError, ArithmeticError):
    """Series or asymptotic evaluation did not reach the requested accuracy."""

    def __init__(self, message, partial_sum=float("nan"), bound=float("nan")):
        super().__init__(message)
        self.partial_sum = partial_sum
        self.bound = bound


class DivergenceError(FraflowError, RuntimeError):
    """A trajectory left the finite region.

    ``trajectory`` holds the nodes up to and including ``last_valid``.
    """

    def __init__(self, message, last_valid, trajectory=None):
        super().__init__(message)
        self.last_valid = last_valid
        self.trajectory = trajectory


class ContractionError(FraflowError, RuntimeError):
    """Picard iteration differences grew for several consecutive sweeps."""

    def __init__(self, message, differences=()):
        super().__init__(message)
        self.differences = list(differences)


class ToleranceNotMetError(FraflowError, RuntimeError):
    def __init__(self, message, last_iterate=None, differences=()):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.differences = list(differences)
