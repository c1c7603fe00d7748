"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericError -> 4.
"""


class VibdictError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(VibdictError):
    """Invalid or inconsistent configuration (bad key, bad value, bad flag)."""


class DataError(VibdictError):
    """Unreadable, malformed, or semantically unusable input data."""


class NumericError(VibdictError):
    """A computation could not produce a meaningful numeric result."""
