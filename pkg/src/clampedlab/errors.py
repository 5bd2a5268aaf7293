"""Exception hierarchy shared by every clampedlab module."""


class ClampedLabError(Exception):
    """Base class for all library errors."""


class InputError(ClampedLabError, ValueError):
    """An argument violates a documented precondition."""


class ConvergenceError(ClampedLabError, RuntimeError):
    """An iterative kernel did not converge within its fixed iteration bound."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DomainError(InputError):
    """A geometric or numerical domain restriction is violated."""


class TruncationError(ClampedLabError):
    """The Fourier truncation is too small to certify the requested spectrum."""


class SingularityError(ClampedLabError, ArithmeticError):
    """A metric or matrix is degenerate where it must be invertible."""


class UnsupportedError(ClampedLabError):
    """The operation is not defined for the supplied configuration."""


class ConfigurationError(ClampedLabError):
    """A required constant or setting is missing or malformed."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class GapError(ClampedLabError):
    """The spectral gap hypothesis lambda_k < Lambda fails."""


class RejectedCoupleError(ClampedLabError):
    """An (f, g) couple fails the two-point membership condition."""


class DiagnosticError(ClampedLabError):
    """A convergence study produced data that cannot be interpreted."""


class InconsistentDataError(ClampedLabError, ArithmeticError):
    """Input data contradicts a theorem that valid data must satisfy."""
