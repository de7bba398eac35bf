"""Scoring utilities: error norms, definiteness checks, support recovery."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .data import as_matrix
from .errors import DimensionMismatch
from .solver import AdmmResult, AdmmSettings, solve

__all__ = [
    "frobenius_error",
    "spectral_error",
    "is_pd",
    "SupportScore",
    "support_score",
    "RocResult",
    "roc_curve",
]

# Entries of the thresholded solver iterate at or below this magnitude
# count as zero, matching the solver's zero classification.
ZERO_TOL = 1e-12


def _pair(est, truth) -> tuple[np.ndarray, np.ndarray]:
    e = as_matrix(est)
    t = as_matrix(truth)
    if e.shape != t.shape:
        raise DimensionMismatch(f"shapes {e.shape} and {t.shape} differ")
    return e, t


def frobenius_error(est, truth) -> float:
    e, t = _pair(est, truth)
    return float(np.linalg.norm(e - t, "fro"))


def spectral_error(est, truth) -> float:
    """Largest singular value of the difference."""
    e, t = _pair(est, truth)
    return float(np.linalg.norm(e - t, 2))


def is_pd(a, tol: float = 0.0) -> tuple[bool, float]:
    """Whether the smallest eigenvalue exceeds ``tol``; returns it too."""
    min_eig = float(np.linalg.eigvalsh(as_matrix(a))[0])
    return min_eig > tol, min_eig


@dataclass(frozen=True)
class SupportScore:
    """Off-diagonal support recovery rates, counting each symmetric pair once.

    ``tpr`` defaults to 1.0 when the true support is empty; ``tpr_defined``
    flags that convention. ``fpr`` is handled the same way.
    """

    tpr: float
    fpr: float
    true_support_size: int
    est_support_size: int
    tpr_defined: bool = True
    fpr_defined: bool = True


def support_score(est, truth, zero_tol: float = ZERO_TOL) -> SupportScore:
    """Classify upper-triangle off-diagonal entries as edges by magnitude."""
    e, t = _pair(est, truth)
    iu = np.triu_indices(e.shape[0], k=1)
    est_edges = np.abs(e[iu]) > zero_tol
    true_edges = np.abs(t[iu]) > zero_tol
    n_true = int(true_edges.sum())
    n_null = int((~true_edges).sum())
    hits = int((est_edges & true_edges).sum())
    false_hits = int((est_edges & ~true_edges).sum())
    return SupportScore(
        tpr=hits / n_true if n_true else 1.0,
        fpr=false_hits / n_null if n_null else 0.0,
        true_support_size=n_true,
        est_support_size=int(est_edges.sum()),
        tpr_defined=n_true > 0,
        fpr_defined=n_null > 0,
    )


@dataclass(frozen=True)
class RocResult:
    """Support scores along a decreasing penalty grid, with an optional
    marker for a cross-validation-selected penalty."""

    lambdas: tuple[float, ...]
    scores: tuple[SupportScore, ...]
    marker_index: int | None = None


def roc_curve(
    sample,
    truth,
    grid: Sequence[float],
    settings: AdmmSettings,
    *,
    zero_tol: float = ZERO_TOL,
    cv_lambda: float | None = None,
) -> RocResult:
    """One constrained fit per penalty, scored for support recovery.

    ``grid`` must be decreasing; fits are warm-started along it. Support
    is read from the thresholded iterate, which carries exact zeros.
    """
    e, t = _pair(sample, truth)
    del e
    scores: list[SupportScore] = []
    warm: AdmmResult | None = None
    grid = [float(x) for x in grid]
    for lam in grid:
        fit = solve(sample, replace(settings, lam=lam), warm_start=warm)
        warm = fit if fit.dual_variable is not None else None
        scores.append(support_score(fit.sparse_solution, t, zero_tol))
    marker = None
    if cv_lambda is not None:
        marker = int(np.argmin(np.abs(np.asarray(grid) - cv_lambda)))
    return RocResult(tuple(grid), tuple(scores), marker)
