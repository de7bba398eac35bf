"""Tuning-parameter selection.

Two routes are provided: group-level K-fold cross-validation over a
decreasing penalty grid (with both the minimum-error and the
one-standard-error selection rules), and the closed-form theoretical
rates for each estimator, which take the design constants and the
sparsity-class bounds as inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .data import DesignSummary, RepeatedData, SymMatrix, as_matrix
from .errors import DegenerateDesign, InfeasibleSplit, NonpositiveDiagonal
from .estimators import EstimatorKind, sample_estimate
from .solver import AdmmResult, AdmmSettings, solve

__all__ = [
    "TheoryConstants",
    "CvConfig",
    "CvResult",
    "fold_indices",
    "kfold_cv",
    "lambda_grid",
    "theory_lambda_within",
    "theory_lambda_between",
    "theory_lambda_aggregated",
    "theory_lambda_anova",
    "theory_lambda_aggregated_vs_within",
]


@dataclass(frozen=True)
class TheoryConstants:
    """Constants entering the theoretical tuning rates: the two leading
    multipliers and the diagonal bounds of the between/within classes."""

    c1: float = 1.0
    c2: float = 1.0
    m_b: float = 1.0
    m_eps: float = 1.0

    def __post_init__(self):
        if min(self.c1, self.c2, self.m_b, self.m_eps) <= 0:
            raise ValueError("all constants must be > 0")


def theory_lambda_within(m: int, n_total: int, p: int, consts: TheoryConstants) -> float:
    """Rate-optimal penalty for the within-subject estimator:
    c1 * sqrt(N log p) / (N - m)."""
    if not n_total > m:
        raise ValueError("requires n_total > m")
    if p < 2:
        raise ValueError("requires p >= 2")
    return consts.c1 * math.sqrt(n_total * math.log(p)) / (n_total - m)


def theory_lambda_between(design: DesignSummary, p: int, consts: TheoryConstants) -> float:
    """Rate-optimal penalty for the bias-corrected between-subject estimator."""
    m, n_total, n_star = design.m, design.n_total, design.n_star
    return (
        consts.c1 * math.sqrt(math.log(p) / m)
        + consts.c2 * math.sqrt(n_total * math.log(p)) / ((n_total - m) * n_star)
        + consts.m_b / m
        + consts.m_eps / (m * n_star)
    )


def theory_lambda_aggregated(design: DesignSummary, p: int, consts: TheoryConstants) -> float:
    """Penalty rate when the subject-mean covariance estimates the between
    level; the within-level bias term m_eps / n_star does not vanish with m."""
    return (
        consts.c1 * math.sqrt(math.log(p) / design.m)
        + consts.m_b / design.m
        + consts.m_eps / design.n_star
    )


def theory_lambda_anova(design: DesignSummary, p: int, consts: TheoryConstants) -> float:
    """Penalty rate for the variance-components between-subject estimator.

    The leading term scales with the design imbalance max(n_i)/n_zero. On
    balanced designs the estimator coincides with the bias-corrected one,
    so this delegates to :func:`theory_lambda_between` there (which also
    makes the two rates equal bit-exactly).
    """
    if design.imbalance == 1.0:
        return theory_lambda_between(design, p, consts)
    m, n_total, n_zero = design.m, design.n_total, design.n_zero
    return (
        consts.c1 * design.imbalance * math.sqrt(math.log(p) / m)
        + consts.c2 * math.sqrt(n_total * math.log(p)) / (n_zero * (n_total - m))
        + (2.0 * n_total - n_zero * m) * consts.m_b / (2.0 * n_zero * m)
        + consts.m_eps / (n_zero * m)
    )


def theory_lambda_aggregated_vs_within(
    design: DesignSummary, p: int, consts: TheoryConstants
) -> float:
    """Penalty rate when the subject-mean covariance estimates the within
    level; the constant m_b term makes the estimator inconsistent."""
    n_star = design.n_star
    return (
        consts.c1 * math.sqrt(math.log(p) / design.m)
        + consts.m_b
        + (2.0 - n_star) * consts.m_eps / (2.0 * n_star)
    )


def lambda_grid(sample, length: int) -> tuple[float, ...]:
    """Log-spaced decreasing grid from the largest off-diagonal magnitude
    (which zeroes every off-diagonal of the thresholded iterate) down two
    decades to 1/100 of it."""
    if length < 2:
        raise ValueError("grid length must be >= 2")
    a = as_matrix(sample)
    off = np.abs(a - np.diag(np.diagonal(a)))
    lam_max = float(off.max()) if a.shape[0] > 1 else 0.0
    if lam_max <= 0.0:
        lam_max = float(np.finfo(np.float64).tiny)
    grid = np.logspace(math.log10(lam_max), math.log10(lam_max / 100.0), int(length))
    grid[0] = lam_max
    return tuple(float(x) for x in grid)


@dataclass(frozen=True)
class CvConfig:
    """Cross-validation configuration.

    ``lambda_grid`` must be strictly decreasing when given; when ``None``
    the grid is built from the full-data sample estimate with
    ``grid_length`` points.
    """

    estimator: EstimatorKind
    k_folds: int = 5
    lambda_grid: tuple[float, ...] | None = None
    grid_length: int = 20
    seed: int = 0
    # Fold fits stop at this tolerance (selection is insensitive well below
    # it); the final refit keeps the caller's solver settings.
    fit_eps: float = 1e-5

    def __post_init__(self):
        if self.k_folds < 2:
            raise ValueError("k_folds must be >= 2")
        if not self.fit_eps > 0:
            raise ValueError("fit_eps must be > 0")
        if self.lambda_grid is not None:
            grid = tuple(float(x) for x in self.lambda_grid)
            if not grid:
                raise ValueError("lambda_grid must be nonempty")
            if any(x < 0 for x in grid):
                raise ValueError("lambda values must be >= 0")
            if any(a <= b for a, b in zip(grid, grid[1:])):
                raise ValueError("lambda_grid must be strictly decreasing")
            object.__setattr__(self, "lambda_grid", grid)
        if self.grid_length < 2:
            raise ValueError("grid_length must be >= 2")


@dataclass(frozen=True)
class CvResult:
    """Per-penalty cross-validation errors and the two selection rules.

    ``selected_min`` indexes the smallest mean error; ``selected_one_se``
    indexes the largest penalty whose mean error is within one standard
    error of that minimum.
    """

    lambdas: tuple[float, ...]
    fold_errors: np.ndarray
    mean_errors: np.ndarray
    std_errors: np.ndarray
    selected_min: int
    selected_one_se: int

    @property
    def lambda_min(self) -> float:
        return self.lambdas[self.selected_min]

    @property
    def lambda_one_se(self) -> float:
        return self.lambdas[self.selected_one_se]


def fold_indices(seed: int, m: int, k_folds: int) -> list[np.ndarray]:
    """Partition subject indices 0..m-1 into folds.

    A pure function of (seed, m, k_folds): fold sizes differ by at most
    one and the remainder goes to the earliest folds.
    """
    if m < k_folds:
        raise InfeasibleSplit(f"{m} subjects cannot fill {k_folds} folds")
    perm = np.random.default_rng(seed).permutation(m)
    base, extra = divmod(m, k_folds)
    folds = []
    start = 0
    for fold in range(k_folds):
        size = base + (1 if fold < extra else 0)
        folds.append(np.sort(perm[start : start + size]))
        start += size
    return folds


def _fold_sample(data: RepeatedData, kind: EstimatorKind, role: str, fold: int) -> SymMatrix:
    try:
        return sample_estimate(data, kind)
    except (DegenerateDesign, NonpositiveDiagonal) as exc:
        raise InfeasibleSplit(
            f"fold {fold}: {role} split cannot support estimator "
            f"{kind.label}: {exc}"
        ) from exc


def kfold_cv(data: RepeatedData, config: CvConfig, settings: AdmmSettings) -> CvResult:
    """Group-level K-fold cross-validation over a decreasing penalty grid.

    Subjects (never single observations) are partitioned into folds; for
    each penalty and fold, the estimate fit on the training subjects is
    scored by squared Frobenius distance to the matching sample estimate
    on the held-out subjects. Fits along the grid are warm-started.
    """
    kind = config.estimator
    folds = fold_indices(config.seed, data.m, config.k_folds)
    grid = config.lambda_grid
    if grid is None:
        grid = lambda_grid(sample_estimate(data, kind), config.grid_length)

    all_idx = np.arange(data.m)
    fold_errors = np.empty((len(grid), len(folds)))
    for v, val_idx in enumerate(folds):
        train_idx = np.setdiff1d(all_idx, val_idx)
        train = data.subset(train_idx)
        val = data.subset(val_idx)
        s_train = _fold_sample(train, kind, "training", v)
        s_val = _fold_sample(val, kind, "validation", v).values
        warm: AdmmResult | None = None
        for ell, lam in enumerate(grid):
            fit = solve(s_train, replace(settings, lam=lam), warm_start=warm)
            warm = fit if fit.dual_variable is not None else None
            diff = fit.solution.values - s_val
            fold_errors[ell, v] = float(np.linalg.norm(diff) ** 2)

    mean_errors = fold_errors.mean(axis=1)
    std_errors = fold_errors.std(axis=1, ddof=1) / math.sqrt(len(folds))
    selected_min = int(np.argmin(mean_errors))
    threshold = mean_errors[selected_min] + std_errors[selected_min]
    selected_one_se = int(np.flatnonzero(mean_errors <= threshold)[0])
    return CvResult(
        lambdas=tuple(grid),
        fold_errors=fold_errors,
        mean_errors=mean_errors,
        std_errors=std_errors,
        selected_min=selected_min,
        selected_one_se=selected_one_se,
    )
