"""
Exception hierarchy for mpcmp-toolkit.

Every error raised by the library derives from CmpError and carries the
pipeline stage it came from, so the CLI can report a one-line diagnostic
without parsing messages.
"""

from typing import Any, Dict, Optional


class CmpError(Exception):
    """Base class for all library errors."""

    default_stage = "compute"

    def __init__(
        self,
        message: str,
        stage: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.stage = stage or self.default_stage
        self.details = details or {}


class DomainError(CmpError, ValueError):
    """An argument lies outside the domain of the operation."""

    default_stage = "input"


class DivergentSeriesError(DomainError):
    """The normalizing series does not converge (nu = 0 with eta >= 0)."""

    default_stage = "truncation"


class OutOfRangeError(DomainError):
    """A grid query falls outside the grid's bounding rectangle."""

    default_stage = "grid"


class ConvergenceError(CmpError, ArithmeticError):
    """A bracket, solve or fit could not reach its tolerance."""

    default_stage = "solve"


class GridFormatError(CmpError):
    """A grid document is malformed or has an unknown format version."""

    default_stage = "io"


class DataParseError(CmpError, ValueError):
    """A counts file contains something other than non-negative integers."""

    default_stage = "io"

    def __init__(self, message: str, line_number: Optional[int] = None, **kwargs: Any):
        super().__init__(message, **kwargs)
        self.line_number = line_number
