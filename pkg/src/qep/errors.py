"""Exception types shared across the package."""


class QepError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(QepError):
    """Raised when user-supplied values violate a precondition."""


class NotPositiveDefiniteError(QepError):
    """Raised when a covariance matrix cannot be factorized even after
    jitter escalation."""


class NumericalError(QepError):
    """Raised when an iterative numerical procedure fails to converge or
    produces non-finite values."""
