"""Exception hierarchy shared across the package."""


class RetropathError(Exception):
    """Base class for all package errors."""


class DomainError(RetropathError, ValueError):
    """An economic function was evaluated outside its domain."""


class ConfigurationError(RetropathError, ValueError):
    """Invalid parameter values, config keys, or option combinations."""


class SolverError(RetropathError, RuntimeError):
    """A nonlinear solve failed to converge."""

    def __init__(self, message, residual_norm=None, history=None, best=None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.history = history if history is not None else []
        self.best = best


class CalibrationError(RetropathError, RuntimeError):
    """The calibration root-finder failed; carries the worst target residual."""

    def __init__(self, message, worst_target=None, residuals=None):
        super().__init__(message)
        self.worst_target = worst_target
        self.residuals = residuals or {}


class InfeasiblePolicyError(RetropathError, RuntimeError):
    """No instrument setting can satisfy the scenario's constraints."""
