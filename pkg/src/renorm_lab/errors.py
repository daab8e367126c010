"""Exception types shared across the package."""


class RenormLabError(Exception):
    """Base class for all package errors."""


class DomainError(RenormLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class ContractError(RenormLabError, ValueError):
    """Inputs are individually valid but inconsistent with each other."""


class NoRoot(RenormLabError):
    """No sign change in the supplied bracket."""


class ToleranceError(RenormLabError, ArithmeticError):
    """An iterative method did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NoIntersection(RenormLabError):
    """Two boundary curves do not cross where a crossing was requested."""


class TraceError(RenormLabError):
    """Boundary tracing failed after maximal refinement."""


class GeometryError(RenormLabError):
    """A polygonal configuration violates a geometric precondition."""


class NoRestrictionFound(RenormLabError):
    """The polynomial-like restriction search exhausted its dials.

    ``best`` carries the most separated failed candidate (or ``None``).
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
