"""Exception types raised across the package.

Everything derives from :class:`ImbalanceError`; the CLI maps
:class:`InfeasibleError` to exit code 2 and every other subclass to 1.
"""

from __future__ import annotations


class ImbalanceError(Exception):
    """Base class for all package errors."""


class ValidationError(ImbalanceError, ValueError):
    """Input data violates a panel invariant.

    ``row`` and ``column`` locate the offending cell when known (1-based
    line number in the source file and asset label respectively).
    """

    def __init__(self, message: str, *, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class ParseError(ValidationError):
    """Malformed CSV (ragged rows, bad dates, non-numeric cells)."""


class CalendarError(ValidationError):
    """Dates are not strictly increasing or cannot be aligned."""


class ConfigurationError(ValidationError):
    """Run parameters are inconsistent with the data."""


class ContractError(ImbalanceError, ValueError):
    """A caller broke a function precondition (shapes, ranges)."""


class UndefinedRatioError(ImbalanceError, ValueError):
    """A ratio metric has a zero denominator (e.g. all-zero caps)."""


class UndefinedDistributionError(ImbalanceError, ValueError):
    """A month has no present caps to form a distribution from."""


class WindowError(ImbalanceError, ValueError):
    """A trailing window reaches before the start of the data."""


class AlignmentError(ImbalanceError, ValueError):
    """A month has no matching weight row."""


class DegenerateVarianceError(ImbalanceError, ValueError):
    """Portfolio variance is zero, so the Sharpe ratio is undefined."""


class InfeasibleError(ImbalanceError, ValueError):
    """The capped simplex is empty (``m * cap < 1``)."""


class ConvergenceWarning(UserWarning):
    """The Sharpe solver hit its iteration budget."""
