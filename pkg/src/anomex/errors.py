"""Exception taxonomy shared across the package.

The CLI maps these to exit codes: DataError -> 2, ModelError -> 3,
NumericError -> 4. Plain ValueError from parameter validation maps to 1
(usage).
"""


class AnomexError(Exception):
    """Base class for all package-specific failures."""


class DataError(AnomexError):
    """Malformed, missing, or unusable input data."""


class ModelError(AnomexError):
    """Model construction, persistence, or compatibility failure."""


class NumericError(AnomexError):
    """Non-finite or numerically unstable computation."""
