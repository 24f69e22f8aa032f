"""Exception hierarchy shared across the toolkit.

Each branch maps to one CLI exit code (see cli.py): config errors are bad
knob values or malformed config documents, data errors cover bad inputs
(manifest rows, image containers, labels, checkpoint bytes), and numeric
errors abort a diverged training run.
"""


class StatekitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(StatekitError):
    """Invalid configuration value, unknown preset, or bad config document."""


class DataError(StatekitError):
    """Malformed input data: manifest rows, labels, image files."""


class DimensionError(DataError):
    """Tensor shape contract violation; message names the offending shapes."""


class FormatError(DataError):
    """Corrupt, truncated, or mismatched checkpoint file."""


class NumericError(StatekitError):
    """Non-finite loss encountered during training."""
