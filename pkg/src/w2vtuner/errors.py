"""Exception hierarchy shared across the package.

The CLI maps ``ValidationError`` (and click usage errors) to exit code 1 and
everything else derived from ``W2vtError`` to exit code 2.
"""


class W2vtError(Exception):
    """Base class for all package errors."""


class ValidationError(W2vtError):
    """Bad user input: malformed arguments, out-of-range values, missing files."""


class DataFormatError(ValidationError):
    """A corpus file could not be parsed. Carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class EmptyTestSetError(W2vtError):
    """A split produced no evaluable test pairs."""


class TrainingError(W2vtError):
    """Training aborted (non-finite weights, memory cap, ...)."""


class CalibrationError(W2vtError):
    """Cost-model fitting failed (too few or degenerate probe runs)."""
