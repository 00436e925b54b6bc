"""Error hierarchy shared across the package.

The CLI maps each class to a distinct exit code, so keep the split:
configuration problems (bad hyperparameters, malformed config files),
data problems (missing/ill-formed dataset files), and everything else.
"""


class SefmError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SefmError):
    """A hyperparameter or configuration value is outside its documented range."""


class DataError(SefmError):
    """A dataset file is missing, malformed, or inconsistent with its schema."""


class InputError(SefmError):
    """A runtime input violates an operation's contract (e.g. length mismatch)."""
