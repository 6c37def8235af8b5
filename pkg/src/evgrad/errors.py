"""Exception types shared across the package."""


class EvgradError(Exception):
    """Base class for all package errors."""


class ConfigurationError(EvgradError):
    """Invalid configuration value or combination (e.g. EVv with K=1)."""


class ShapeError(EvgradError):
    """Dimension mismatch between arrays / network interfaces."""


class ContractError(EvgradError):
    """A function precondition was violated by the caller."""


class ResourceError(EvgradError):
    """Requested computation exceeds an enforced resource budget."""


class TrainingAbort(EvgradError):
    """Training produced non-finite parameters; carries diagnostics."""
