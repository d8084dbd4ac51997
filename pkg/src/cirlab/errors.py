"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with inputs that violate its contract."""


class ConfigurationError(ValueError):
    """A configuration value or combination of values is invalid."""


class DataError(ValueError):
    """A manifest, record, or sheet is malformed or inconsistent."""


class ServiceError(RuntimeError):
    """Permanent failure from an external annotation service."""


class TransientServiceError(ServiceError):
    """Retryable failure (timeout, rate limit, flaky backend)."""


class BudgetExceededError(ServiceError):
    """The configured request budget for a service has been spent."""


class CheckpointError(RuntimeError):
    """A checkpoint is incompatible with the model or config at hand."""
