"""Core data containers: grouped observations and symmetric matrices.

All containers are immutable after construction (arrays are marked
read-only), so they can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = ["SymMatrix", "SubjectBlock", "RepeatedData", "DesignSummary"]

# Construction rejects inputs whose asymmetry exceeds roundoff scale.
_ASYM_RTOL = 1e-8


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix with an enforced exact-symmetry invariant.

    The stored array is ``(A + A.T) / 2`` of the input, which makes paired
    off-diagonal entries bitwise equal; inputs asymmetric beyond roundoff
    are rejected. All entries must be finite.
    """

    values: np.ndarray

    def __post_init__(self):
        a = np.array(self.values, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if a.size and float(np.max(np.abs(a - a.T))) > _ASYM_RTOL * scale:
            raise ValueError("matrix is not symmetric (beyond roundoff)")
        object.__setattr__(self, "values", _readonly(0.5 * (a + a.T)))

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def diagonal(self) -> np.ndarray:
        return np.diagonal(self.values)


def as_matrix(a) -> np.ndarray:
    """Unwrap a SymMatrix (or pass an ndarray through) as float64."""
    if isinstance(a, SymMatrix):
        return a.values
    return np.asarray(a, dtype=np.float64)


@dataclass(frozen=True)
class SubjectBlock:
    """Observations of one subject: an (n_i, p) array of finite rows."""

    subject_id: str
    observations: np.ndarray

    def __post_init__(self):
        obs = np.array(self.observations, dtype=np.float64)
        if obs.ndim != 2:
            raise ValueError(
                f"subject {self.subject_id!r}: observations must be 2-d, "
                f"got shape {obs.shape}"
            )
        if obs.shape[0] < 1 or obs.shape[1] < 1:
            raise ValueError(
                f"subject {self.subject_id!r}: needs at least one observation "
                "of at least one variable"
            )
        if not np.all(np.isfinite(obs)):
            raise ValueError(f"subject {self.subject_id!r}: non-finite values")
        object.__setattr__(self, "observations", _readonly(obs))

    @property
    def n_obs(self) -> int:
        return self.observations.shape[0]

    @property
    def mean(self) -> np.ndarray:
        return self.observations.mean(axis=0)


@dataclass(frozen=True)
class RepeatedData:
    """Grouped repeated measurements: one block per subject, common width p."""

    subjects: tuple[SubjectBlock, ...]
    variable_names: tuple[str, ...] | None = None

    def __post_init__(self):
        subjects = tuple(self.subjects)
        if len(subjects) < 1:
            raise ValueError("need at least one subject")
        p = subjects[0].observations.shape[1]
        for blk in subjects:
            if blk.observations.shape[1] != p:
                raise ValueError(
                    f"subject {blk.subject_id!r} has {blk.observations.shape[1]} "
                    f"variables, expected {p}"
                )
        if self.variable_names is not None:
            names = tuple(str(v) for v in self.variable_names)
            if len(names) != p:
                raise ValueError(
                    f"{len(names)} variable names for {p} variables"
                )
            object.__setattr__(self, "variable_names", names)
        object.__setattr__(self, "subjects", subjects)

    @classmethod
    def from_arrays(
        cls,
        blocks: Iterable[tuple[str, np.ndarray]],
        variable_names: Sequence[str] | None = None,
    ) -> "RepeatedData":
        subjects = tuple(SubjectBlock(str(sid), obs) for sid, obs in blocks)
        names = tuple(variable_names) if variable_names is not None else None
        return cls(subjects, names)

    @property
    def p(self) -> int:
        return self.subjects[0].observations.shape[1]

    @property
    def m(self) -> int:
        return len(self.subjects)

    @cached_property
    def group_sizes(self) -> np.ndarray:
        return _readonly(np.array([blk.n_obs for blk in self.subjects]))

    @property
    def n_total(self) -> int:
        return int(self.group_sizes.sum())

    @cached_property
    def stacked(self) -> np.ndarray:
        """All observations as one (N, p) array, in subject order."""
        return _readonly(np.vstack([blk.observations for blk in self.subjects]))

    @cached_property
    def subject_means(self) -> np.ndarray:
        return _readonly(np.vstack([blk.mean for blk in self.subjects]))

    def subset(self, indices: Sequence[int]) -> "RepeatedData":
        """A new container holding the selected subjects, in the given order."""
        picked = tuple(self.subjects[int(i)] for i in indices)
        return RepeatedData(picked, self.variable_names)


@dataclass(frozen=True)
class DesignSummary:
    """Scalar summaries of a grouped design.

    ``n_star`` is the harmonic mean group size m / sum(1/n_i); ``n_zero``
    is the variance-component weighting constant
    (N - sum(n_i^2)/N) / (m - 1); ``imbalance`` is max(n_i) / n_zero,
    equal to 1 exactly when all group sizes are equal.
    """

    m: int
    n_total: int
    n_star: float
    n_zero: float
    imbalance: float

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "DesignSummary":
        sizes = [int(n) for n in sizes]
        m = len(sizes)
        if m < 2:
            raise ValueError("need at least two groups")
        if any(n < 1 for n in sizes):
            raise ValueError("group sizes must be positive")
        n_total = sum(sizes)
        # Exact rational arithmetic so that balanced designs give
        # n_star == n_zero == n bit-exactly after one final rounding.
        n_star = Fraction(m) / sum(Fraction(1, n) for n in sizes)
        n_zero = (Fraction(n_total) - Fraction(sum(n * n for n in sizes), n_total)) / (m - 1)
        imbalance = Fraction(max(sizes)) / n_zero
        return cls(m, n_total, float(n_star), float(n_zero), float(imbalance))
