"""Exception hierarchy shared across the package.

Config problems map to CLI exit code 2, numerical failures to exit code 3.
"""


class FrontierError(Exception):
    """Base class for all package errors."""


class ConfigError(FrontierError):
    """Invalid or unparsable experiment configuration."""


class ParseError(ConfigError):
    """Config text could not be parsed."""


class ValidationError(ConfigError):
    """Config parsed but a key failed validation."""


class NumericsError(FrontierError):
    """A numerical procedure failed or produced an inconsistent result."""


class NotThinTailed(NumericsError):
    """Operation requires a kernel with finite half first moment."""


class NoConvergence(NumericsError):
    """An iterative procedure did not converge within its budget."""


class NotConverged(NumericsError):
    """A windowed average failed its Cauchy convergence test."""


class NonPositive(NumericsError):
    """A quantity that must stay positive hit zero or below (time step too large)."""


class WindowExhausted(NumericsError):
    """A free boundary ran into the truncation margin of the spatial window."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class StabilityViolation(NumericsError):
    """Density left the admissible range during time stepping."""

    def __init__(self, message: str, t: float | None = None):
        super().__init__(message)
        self.t = t


class Degenerate(NumericsError):
    """A renormalized profile underflowed to zero."""


class InsufficientData(NumericsError):
    """Not enough samples in a record to carry out the requested estimate."""
