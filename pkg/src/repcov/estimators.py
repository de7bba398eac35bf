"""Sample covariance estimators for grouped repeated measurements.

Four estimators are provided for the two levels of the one-way
random-effect decomposition ``Y_ij = b_i + e_ij``:

* ``within_sample`` -- pooled within-subject covariance of the residuals
  around each subject's mean (unbiased for the within level).
* ``aggregated_sample`` -- covariance of the subject means (biased for the
  between level by the attenuated within-level term).
* ``between_sample`` -- the aggregated estimate minus its within-level
  bias (unbiased for the between level).
* ``anova_sample`` -- the variance-components (MANOVA-style) unbiased
  between-level estimate, weighting subject means by group size around
  the grand mean.

All estimators are pure functions of the data; the two difference-based
estimators may be indefinite and may even carry negative diagonal
entries, which is documented behaviour, not an error.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .data import DesignSummary, RepeatedData, SymMatrix
from .errors import DegenerateDesign, NonpositiveDiagonal

__all__ = [
    "within_sample",
    "aggregated_sample",
    "between_sample",
    "anova_sample",
    "design_summary",
    "to_correlation",
    "Target",
    "Mode",
    "EstimatorKind",
    "sample_estimate",
]


def _require(data: RepeatedData, *, subjects: int = 2, replication: bool = False) -> None:
    if data.m < subjects:
        raise DegenerateDesign(f"need at least {subjects} subjects")
    if replication and data.n_total == data.m:
        raise DegenerateDesign(
            "no within-subject replication (every subject has one observation)"
        )


def within_sample(data: RepeatedData) -> SymMatrix:
    """Pooled within-subject covariance, divisor N - m. PSD by construction."""
    _require(data, subjects=1, replication=True)
    centered = data.stacked - np.repeat(data.subject_means, data.group_sizes, axis=0)
    scatter = centered.T @ centered
    return SymMatrix(scatter / (data.n_total - data.m))


def aggregated_sample(data: RepeatedData) -> SymMatrix:
    """Sample covariance of the subject means, divisor m - 1. PSD."""
    _require(data)
    means = data.subject_means
    centered = means - means.mean(axis=0)
    return SymMatrix(centered.T @ centered / (data.m - 1))


def _within_bias_factor(sizes) -> float:
    # sum_i 1/(m n_i) == 1/n_star, rounded once from exact rationals.
    return float(sum(Fraction(1, int(n)) for n in sizes) / len(sizes))


def between_sample(data: RepeatedData) -> SymMatrix:
    """Bias-corrected between-subject covariance.

    Subtracts 1/n_star times the within-subject estimate from the
    aggregated estimate. May be indefinite; diagonal entries may be
    negative. Repairing definiteness is the solver's job.
    """
    _require(data, replication=True)
    bias = _within_bias_factor(data.group_sizes)
    agg = aggregated_sample(data).values
    win = within_sample(data).values
    return SymMatrix(agg - bias * win)


def anova_sample(data: RepeatedData) -> SymMatrix:
    """Variance-components between-subject estimate.

    Subject means are weighted by group size around the observation-weighted
    grand mean, and the within-subject estimate is removed before dividing
    by the weighting constant n_zero. May be indefinite.
    """
    _require(data, replication=True)
    summary = design_summary(data)
    if not summary.n_zero > 0:
        raise DegenerateDesign("weighting constant n_zero must be positive")
    sizes = data.group_sizes.astype(np.float64)
    means = data.subject_means
    grand = sizes @ means / data.n_total
    weighted = np.sqrt(sizes / (data.m - 1))[:, None] * (means - grand)
    scatter = weighted.T @ weighted
    win = within_sample(data).values
    return SymMatrix((scatter - win) / summary.n_zero)


def design_summary(data: RepeatedData) -> DesignSummary:
    """Group counts plus the derived constants n_star, n_zero, imbalance."""
    return DesignSummary.from_sizes(data.group_sizes)


def to_correlation(cov: SymMatrix) -> SymMatrix:
    """Rescale a covariance to a correlation matrix (unit diagonal).

    Raises NonpositiveDiagonal (listing the offending indices) when any
    variance is not strictly positive, which the difference-based
    between-subject estimates can produce.
    """
    diag = cov.diagonal()
    bad = np.flatnonzero(~(diag > 0))
    if bad.size:
        raise NonpositiveDiagonal(bad)
    inv_sd = 1.0 / np.sqrt(diag)
    corr = cov.values * inv_sd[:, None] * inv_sd[None, :]
    np.fill_diagonal(corr, 1.0)
    return SymMatrix(corr)


class Target(Enum):
    """Which sample estimator feeds the regularized fit."""

    WITHIN = "within"
    BETWEEN = "between"
    ANOVA = "anova"
    AGGREGATED = "aggregated"


class Mode(Enum):
    COVARIANCE = "cov"
    CORRELATION = "cor"


_SAMPLE_FN = {
    Target.WITHIN: within_sample,
    Target.BETWEEN: between_sample,
    Target.ANOVA: anova_sample,
    Target.AGGREGATED: aggregated_sample,
}


@dataclass(frozen=True)
class EstimatorKind:
    """One of the four sample estimators, in covariance or correlation mode."""

    target: Target
    mode: Mode = Mode.COVARIANCE

    @classmethod
    def parse(cls, target: str, mode: str = "cov") -> "EstimatorKind":
        return cls(Target(target), Mode(mode))

    @property
    def label(self) -> str:
        return f"{self.target.value}:{self.mode.value}"


def sample_estimate(data: RepeatedData, kind: EstimatorKind) -> SymMatrix:
    """The raw sample estimate for ``kind`` (rescaled in correlation mode)."""
    sample = _SAMPLE_FN[kind.target](data)
    if kind.mode is Mode.CORRELATION:
        sample = to_correlation(sample)
    return sample
