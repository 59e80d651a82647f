"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the documented domain of a function."""


class ConvergenceError(RuntimeError):
    """A numerical procedure did not reach its tolerance."""


class DegenerateSchemeError(ValueError):
    """Measurement scheme for which the correlation formulas break down."""
