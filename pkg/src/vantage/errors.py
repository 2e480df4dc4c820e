"""Exception types shared across the package."""


class VantageError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(VantageError):
    """Raised when a campaign configuration document is invalid."""


class FactorizationError(VantageError):
    """Raised when a covariance matrix cannot be factorized.

    ``jitter`` records the largest diagonal jitter attempted before
    giving up.
    """

    def __init__(self, message: str, jitter: float = 0.0):
        super().__init__(message)
        self.jitter = jitter


class CampaignError(VantageError):
    """Raised when a campaign aborts; ``iteration`` is the failing round."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration
