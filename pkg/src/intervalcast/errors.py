"""Exception hierarchy shared across the package."""


class IntervalcastError(Exception):
    """Base class for all package errors."""


class ConfigError(IntervalcastError):
    """Invalid run configuration (bad flag values, inconsistent settings)."""


class DataError(IntervalcastError):
    """Malformed or inconsistent input data."""
