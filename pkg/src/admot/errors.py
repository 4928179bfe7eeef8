"""Exception types raised across the package."""


class AdmotError(Exception):
    """Base class for package errors."""


class InvalidDimensionError(AdmotError, ValueError):
    """A size argument is zero, negative or inconsistent with its partner."""


class SliceOverflowError(AdmotError, ValueError):
    """More rows were requested than the probe matrix holds."""


class InvalidParameterError(AdmotError, ValueError):
    """A scalar parameter is outside its admissible range."""


class InfeasibleError(AdmotError):
    """No point satisfies the residual constraint."""

    def __init__(self, message, min_residual=None):
        super().__init__(message)
        self.min_residual = min_residual


class NoConvergenceError(AdmotError):
    """An iterative solve stopped without a usable answer.

    ``diagnostics`` carries whatever the solver knew when it gave up.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
