"""Exception types shared across the package."""


class PlanavError(Exception):
    """Base class for all package errors."""


class InvalidGeometryError(PlanavError, ValueError):
    """Degenerate or ill-formed geometric input."""


class ContractViolationError(PlanavError, ValueError):
    """An operation was called outside its stated preconditions."""


class NumericalFailureError(PlanavError, RuntimeError):
    """An iterative routine failed to converge; carries the best bound found."""

    def __init__(self, message, best_bound=None):
        super().__init__(message)
        self.best_bound = best_bound


class ConfigurationError(PlanavError, ValueError):
    """Invalid scenario or formulation configuration."""


class InfeasibleScenarioError(PlanavError, RuntimeError):
    """No collision-free path exists at the planning resolution."""
