"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A tuning parameter is outside its admissible range."""


class InvalidDataError(ValueError):
    """Input data cannot be used (wrong shape, NaN/Inf, degenerate columns, ...)."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance.

    The last iterate is attached so callers can inspect or reuse it.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class ExactFitError(RuntimeError):
    """More observations are fitted exactly than the M-scale can absorb (scale 0)."""


class InvalidPreliminaryError(ValueError):
    """A preliminary estimate is unusable for adaptive loadings (all-zero slopes)."""
