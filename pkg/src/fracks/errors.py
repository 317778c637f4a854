"""Exception hierarchy shared by all modules."""


class FracksError(Exception):
    """Base class for package errors."""


class GammaPoleError(FracksError, ValueError):
    """Gamma function evaluated at a non-positive integer."""


class ConvergenceError(FracksError, ArithmeticError):
    """A series did not converge within its term budget."""


class InvariantError(FracksError, ValueError):
    """A physical invariant (trace, hermiticity, positivity) was violated."""


class DensityUnderflowError(FracksError, ValueError):
    """The density fell below its floor inside an evaluation window."""


class GaugeMismatchError(FracksError, ValueError):
    """Phase snapshots do not share the declared gauge."""


class GridMismatchError(FracksError, ValueError):
    """Two fields are sampled on different grids or at different times."""


class MissingFieldError(FracksError, ValueError):
    """A snapshot lacks a derivative field that a formula needs."""


class UnrepairableSingularityError(FracksError):
    """A run of non-finite samples is too long to be averaged away."""

    def __init__(self, message, *, x_range=None, alpha=None):
        super().__init__(message)
        self.x_range = x_range
        self.alpha = alpha


class ConfigError(FracksError, ValueError):
    """Invalid or unknown configuration entry."""
