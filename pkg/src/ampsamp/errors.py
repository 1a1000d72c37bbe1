"""Exception hierarchy shared by all modules."""


class AmpSampError(Exception):
    """Base class for every error raised by ampsamp."""


class InvalidParameterError(AmpSampError, ValueError):
    pass


class SlopeTooSmallError(InvalidParameterError):
    """The ramp slope does not dominate the derivative bound of the signal."""


class ConfigError(InvalidParameterError):
    pass


class NonuniformInputError(InvalidParameterError):
    pass


class GridTooCoarseError(InvalidParameterError):
    pass


class InsufficientPointsError(InvalidParameterError):
    pass


class ZeroReferenceError(InvalidParameterError):
    pass


class ConvergenceError(AmpSampError, RuntimeError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NumericalFailure(AmpSampError, RuntimeError):
    """A reconstruction step could not be carried out (e.g. a non-invertible warp)."""
