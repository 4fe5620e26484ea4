"""Exception types shared across the solver stack."""


class QbgkError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QbgkError):
    """Invalid run configuration (bad file, bad value, missing scenario)."""


class DomainError(QbgkError):
    """Input outside the mathematical domain of an operation."""


class FeasibilityError(QbgkError):
    """No feasible equilibrium parameters (e.g. Bose branch constraint)."""


class SaturationError(QbgkError):
    """Fermion target density at or beyond the grid saturation bound."""


class SolverError(QbgkError):
    """Newton iteration failed to converge.

    Carries the last gradient residual so callers can report how close
    the solve got before giving up.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DiagnosticError(QbgkError):
    """Distribution values outside the domain of a diagnostic functional."""


class InvariantViolation(QbgkError):
    """A monitored run invariant failed under strict checking."""
