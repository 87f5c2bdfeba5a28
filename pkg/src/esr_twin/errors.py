"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CalibrationRangeError(ValueError):
    """A lens setting or field value is outside what the microscope can reach."""


class ConfigError(ValueError):
    """A run configuration or sweep plan is invalid."""


class NoLineFound(RuntimeError):
    """A spectrum does not contain a usable derivative line."""
