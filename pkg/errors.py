"""
Exception types shared across the toolkit.

The CLI maps them to exit codes: UsageError -> 2, DomainError and
PreconditionError -> 3, NumericalError -> 4.
"""


class DsimError(Exception):
    """Base class for toolkit errors."""
    exit_code = 1


class UsageError(DsimError):
    """Command-line misuse (missing seed, missing H, unknown model)."""
    exit_code = 2


class DomainError(DsimError, ValueError):
    """An input lies outside the domain of an operation."""
    exit_code = 3


class DegenerateInputError(DomainError):
    """Data for which an estimator is undefined (zero variation, zero variance)."""


class PreconditionError(DsimError, ValueError):
    """A model or covariance table fails a stated precondition."""
    exit_code = 3

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class NumericalError(DsimError, ArithmeticError):
    """A factorization failed even after jitter escalation."""
    exit_code = 4
