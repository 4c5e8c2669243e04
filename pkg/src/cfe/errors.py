"""Exception hierarchy shared by all cfe modules."""


class CFEError(Exception):
    """Base class for every error raised by the package."""


class InvalidArgumentError(CFEError, ValueError):
    pass


class KernelEvaluationError(CFEError):
    """A kernel returned NaN, inf or a negative rate."""

    def __init__(self, message, y=None, z=None):
        super().__init__(message)
        self.y = y
        self.z = z


class InfeasibleGridError(CFEError):
    pass


class OutOfDomainError(CFEError, ValueError):
    pass


class StiffnessError(CFEError):
    """Persistent negativity after halving the step down to ``dt_min``."""


class PropertyViolationError(CFEError):
    """A checked inequality failed; ``witness`` holds the offending point."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class TruncationTooSmallError(CFEError):
    pass


class PostGelationError(CFEError):
    pass


class ConfigError(CFEError):
    """Malformed or inconsistent run configuration."""
