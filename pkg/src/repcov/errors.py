"""Exception types shared across the package."""

from __future__ import annotations


class RepcovError(Exception):
    """Base class for all package-specific errors."""


class DegenerateDesign(RepcovError):
    """The grouped design cannot support the requested estimator
    (e.g. no within-subject replication, or fewer than two subjects)."""


class NonpositiveDiagonal(RepcovError):
    """A covariance matrix has nonpositive diagonal entries, so it cannot
    be rescaled to a correlation matrix."""

    def __init__(self, indices):
        self.indices = tuple(int(i) for i in indices)
        super().__init__(
            f"nonpositive diagonal entries at indices {list(self.indices)}"
        )


class EigenFailure(RepcovError):
    """The symmetric eigensolver failed to converge."""


class MaxItersExceeded(RepcovError):
    """The solver hit its iteration cap before meeting the stopping
    criteria. Carries the last iterate and its residuals in ``result``."""

    def __init__(self, result):
        self.result = result
        super().__init__(
            f"no convergence after {result.iterations} iterations "
            f"(primal residual {result.primal_residual:.3e}, "
            f"dual residual {result.dual_residual:.3e})"
        )


class InfeasibleSplit(RepcovError):
    """A cross-validation fold violates an estimator precondition."""


class NotPositiveDefinite(RepcovError):
    """A covariance template is not positive definite."""


class DimensionMismatch(RepcovError):
    """Two matrices that must share a dimension do not."""


class ConfigError(RepcovError):
    """A study configuration file failed validation."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParseError(RepcovError):
    """An input table cell or row could not be parsed."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f" at row {row}"
            if column is not None:
                where += f", column {column}"
        super().__init__(message + where)


class EmptyInput(ParseError):
    """The input table has no data rows."""

    def __init__(self, message="input contains no data rows"):
        super().__init__(message)


class RaggedRow(ParseError):
    """A data row has the wrong number of columns."""
