"""Exception types raised across the package."""


class SurvSplitError(Exception):
    """Base class for package errors."""


class SchemaError(SurvSplitError, ValueError):
    """A required column is missing or the table layout is wrong."""


class ParseError(SurvSplitError, ValueError):
    """A cell could not be parsed or violates the value domain."""

    def __init__(self, message, row=None, column=None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class NoEvents(SurvSplitError):
    """The node holds no observed failures, so no time grid exists."""


class NoValidSplit(SurvSplitError):
    """Every candidate split was skipped."""


class UsageError(SurvSplitError, ValueError):
    """Invalid arguments or mismatched inputs."""


class ModelFormatError(SurvSplitError):
    """A model file is corrupt or has an unsupported version."""


class MetricUndefined(SurvSplitError, ValueError):
    """The metric has no comparable pairs to work with."""


class ConfigError(SurvSplitError, ValueError):
    """A generator configuration is invalid or could not be calibrated."""


class TrainingError(SurvSplitError):
    """The data cannot be used to train a forest."""
