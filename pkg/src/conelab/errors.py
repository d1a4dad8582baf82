"""Exception types shared across the package."""


class ConelabError(Exception):
    """Base class for all package errors."""


class EvaluationError(ConelabError):
    """A gauge or integrand produced a non-finite value."""


class DomainError(ConelabError, ValueError):
    """An argument lies outside the domain of the operation."""


class SolverError(ConelabError):
    """An iterative solver failed to converge."""

    def __init__(self, message, best_residual=float("nan")):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class ResolutionError(ConelabError):
    """Quadrature or grid resolution is too coarse for the requested oscillation."""

    def __init__(self, message, required=None):
        hint = f"; need resolution >= {required}" if required is not None else ""
        super().__init__(message + hint)
        self.required = required


class FitError(ConelabError):
    """A regression could not be performed on the supplied data."""
