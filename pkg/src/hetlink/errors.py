"""Exception types shared across the toolkit.

The CLI maps ``DataError`` (and subclasses) to exit code 1 and
``ConfigError`` to exit code 2; anything else is a bug.
"""


class DataError(Exception):
    """Input data violates the expected schema or value ranges."""


class SchemaError(DataError):
    """A required column or field is missing or malformed."""

    def __init__(self, column: str, message: str | None = None):
        self.column = column
        super().__init__(message or f"missing or invalid column: {column!r}")


class RowError(DataError):
    """A single input row could not be parsed."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class RangeError(DataError):
    """A parsed value lies outside its permitted range."""


class ConfigError(Exception):
    """A configuration value or file is invalid."""
