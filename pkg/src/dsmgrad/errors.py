"""Exception types raised by the solvers and validators."""


class DSMError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DSMError, ValueError):
    """Grid functions living on different grids were combined."""


class ParameterError(DSMError, ValueError):
    """An input parameter is outside its admissible range."""


class SolverFailure(DSMError, RuntimeError):
    """An inner solver did not converge.

    The last iterate is kept on the exception so callers can inspect it.
    """

    def __init__(self, message, last_iterate=None, a=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.a = a


class DivergenceError(DSMError, RuntimeError):
    """An iteration produced a non-finite state."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class BracketError(DSMError, ValueError):
    """A search bracket does not straddle the target value."""


class NoCrossingError(DSMError, ValueError):
    """The data already satisfies the discrepancy level at ``u = 0``."""


class PreconditionError(DSMError, ValueError):
    """A premise required by a numerical check is violated."""


class InternalConsistencyError(DSMError, RuntimeError):
    """A construction that should succeed by design failed re-validation."""
