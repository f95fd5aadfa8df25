"""Exception types raised across the package."""


class KineticError(Exception):
    """Base class for solver errors."""


class InvalidArgumentError(KineticError, ValueError):
    """An argument is outside its admissible range."""


class DegenerateStateError(KineticError, ArithmeticError):
    """Moments cannot be formed, e.g. non-positive density or temperature."""


class FrameError(KineticError):
    """The ansatz frame violates its positivity floor or is otherwise unusable."""


class ConfigError(KineticError, ValueError):
    """A scenario configuration could not be parsed or validated."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SolverAbort(KineticError):
    """Time stepping stopped because the state became unusable."""
