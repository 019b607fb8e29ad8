"""Exception types shared across the package."""


class PlapLabError(Exception):
    """Base class for all package errors."""


class ConfigError(PlapLabError):
    """Invalid scenario configuration (bad key, value, or constraint)."""


class BoundaryViolationError(PlapLabError):
    """A field does not satisfy the boundary condition it is evaluated under."""


class InvariantViolation(PlapLabError):
    """A structural invariant the discretization guarantees was observed broken."""
