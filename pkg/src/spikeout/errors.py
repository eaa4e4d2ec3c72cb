"""Exception taxonomy shared across the package."""


class SpikeoutError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SpikeoutError, ValueError):
    """Invalid model spec, scenario, or CLI configuration."""


class DataError(SpikeoutError, ValueError):
    """Input data violates a precondition (non-finite entries, non-unit vectors, ...)."""


class CapabilityError(SpikeoutError, RuntimeError):
    """A required optional payload (e.g. retained coefficients) is missing."""


class UnsupportedCaseError(SpikeoutError, ValueError):
    """The requested quantity has no predicted value in this regime."""


class RunError(SpikeoutError, RuntimeError):
    """A scenario run failed; partial results may have been written."""
