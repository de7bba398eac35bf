"""Sparse positive-definite matrix fitting.

Solves ``min 0.5 * ||X - B||_F^2 + lam * |offdiag(X)|_1`` subject to the
eigenvalue floor ``X >= delta * I`` by alternating directions: an
eigenvalue-clamped projection step, an off-diagonal soft-threshold step,
and a dual update, with an adaptive penalty parameter. When the
soft-thresholded input already satisfies the floor it is the exact
solution and is returned directly (the fast path).

The constrained iterate carries the positive-definiteness certificate;
the thresholded iterate carries exact zeros and is reported alongside it
as the sparsity pattern.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .data import SymMatrix, as_matrix
from .errors import EigenFailure, MaxItersExceeded

__all__ = [
    "AdmmSettings",
    "AdmmResult",
    "default_delta",
    "soft_threshold_offdiag",
    "psd_floor_projection",
    "solve",
    "objective_value",
    "kkt_residual",
]


def default_delta(b) -> float:
    """Scale-relative eigenvalue floor: 1e-4 times the largest diagonal
    entry, never below 1e-4."""
    diag = np.diagonal(as_matrix(b))
    return 1e-4 * max(1.0, float(diag.max()))


@dataclass(frozen=True)
class AdmmSettings:
    """Solver configuration.

    ``delta=None`` resolves to :func:`default_delta` of the input at solve
    time. The stopping tolerances follow the absolute/relative residual
    scheme with both set to 1e-8 by default.
    """

    lam: float = 0.0
    delta: float | None = None
    rho0: float = 0.1
    eps_abs: float = 1e-8
    eps_rel: float = 1e-8
    max_iters: int = 10_000

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("lam must be >= 0")
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be > 0 (or None for the default)")
        if not self.rho0 > 0:
            raise ValueError("rho0 must be > 0")
        if not (self.eps_abs > 0 and self.eps_rel > 0):
            raise ValueError("tolerances must be > 0")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class AdmmResult:
    """Solution plus convergence diagnostics.

    ``solution`` satisfies the eigenvalue floor (up to eigensolver
    roundoff); ``sparse_solution`` is the thresholded iterate whose exact
    zeros define the reported support. On the fast path the two coincide.
    """

    solution: SymMatrix
    sparse_solution: SymMatrix
    iterations: int
    primal_residual: float
    dual_residual: float
    used_fast_path: bool
    min_eigenvalue: float
    delta: float
    rho: float
    dual_variable: Optional[np.ndarray] = None


def soft_threshold_offdiag(a, t: float) -> SymMatrix:
    """Soft-threshold the off-diagonal entries by ``t``; diagonal unchanged.

    The penalty excludes the diagonal, so its prox must too.
    """
    if not t >= 0:
        raise ValueError("threshold must be >= 0")
    return SymMatrix(kernels.soft_threshold_offdiag_raw(as_matrix(a), float(t)))


def psd_floor_projection(a, delta: float) -> SymMatrix:
    """Nearest (Frobenius) matrix whose eigenvalues are all >= ``delta``."""
    if not delta >= 0:
        raise ValueError("delta must be >= 0")
    try:
        out = kernels.psd_floor_raw(as_matrix(a), float(delta))
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    return SymMatrix(out)


def objective_value(b, x, lam: float) -> float:
    """0.5 * ||x - b||_F^2 + lam * sum of off-diagonal |x|."""
    bm = as_matrix(b)
    xm = as_matrix(x)
    offdiag_l1 = float(np.abs(xm).sum() - np.abs(np.diagonal(xm)).sum())
    return 0.5 * float(np.linalg.norm(xm - bm) ** 2) + lam * offdiag_l1


def solve(
    b,
    settings: AdmmSettings,
    *,
    warm_start: AdmmResult | None = None,
    use_fast_path: bool = True,
) -> AdmmResult:
    """Fit the sparse eigenvalue-floored approximation of ``b``.

    Raises :class:`MaxItersExceeded` (carrying the last iterate and its
    residuals) if the stopping criteria are not met within
    ``settings.max_iters`` iterations.
    """
    bsym = b if isinstance(b, SymMatrix) else SymMatrix(b)
    bm = np.ascontiguousarray(bsym.values)
    lam = float(settings.lam)
    delta = float(settings.delta) if settings.delta is not None else default_delta(bm)

    thresholded = kernels.soft_threshold_offdiag_raw(bm, lam)
    if use_fast_path:
        try:
            eigs = np.linalg.eigvalsh(thresholded)
        except np.linalg.LinAlgError as exc:
            raise EigenFailure(str(exc)) from exc
        if eigs[0] >= delta:
            sol = SymMatrix(thresholded)
            return AdmmResult(
                solution=sol,
                sparse_solution=sol,
                iterations=0,
                primal_residual=0.0,
                dual_residual=0.0,
                used_fast_path=True,
                min_eigenvalue=float(eigs[0]),
                delta=delta,
                rho=float(settings.rho0),
            )

    if warm_start is not None and warm_start.dual_variable is not None:
        sigma0 = np.ascontiguousarray(warm_start.solution.values)
        theta0 = np.ascontiguousarray(warm_start.sparse_solution.values)
        dual0 = np.ascontiguousarray(warm_start.dual_variable)
        rho0 = float(warm_start.rho)
    else:
        sigma0 = thresholded
        theta0 = thresholded
        dual0 = np.zeros_like(bm)
        rho0 = float(settings.rho0)

    try:
        sigma, theta, dual, iters, r_norm, s_norm, rho, converged = kernels.admm_core(
            bm,
            lam,
            delta,
            rho0,
            float(settings.eps_abs),
            float(settings.eps_rel),
            int(settings.max_iters),
            sigma0,
            theta0,
            dual0,
        )
        min_eig = float(np.linalg.eigvalsh(sigma)[0])
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc

    result = AdmmResult(
        solution=SymMatrix(sigma),
        sparse_solution=SymMatrix(theta),
        iterations=int(iters),
        primal_residual=float(r_norm),
        dual_residual=float(s_norm),
        used_fast_path=False,
        min_eigenvalue=min_eig,
        delta=delta,
        rho=float(rho),
        dual_variable=dual,
    )
    if not converged:
        raise MaxItersExceeded(result)
    return result


def kkt_residual(
    b,
    solution,
    lam: float,
    delta: float,
    *,
    zero_tol: float = 1e-6,
    active_tol: float = 1e-6,
    max_iters: int = 200,
) -> float:
    """First-order optimality violation of ``solution`` for the penalized
    floored problem; 0 certifies optimality.

    Measures the Frobenius distance between the stationarity defect and
    the nearest admissible pair of (a) an off-diagonal subgradient, fixed
    to ``lam * sign`` on entries larger than ``zero_tol`` and free in
    ``[-lam, lam]`` elsewhere, and (b) a PSD multiplier supported on the
    eigenspace within ``active_tol`` of the floor. The minimization over
    the two convex sets runs by alternating projections.
    """
    bm = as_matrix(b)
    xm = as_matrix(solution)
    lam = float(lam)
    defect = xm - bm

    # Subgradient box: point intervals on the diagonal and on entries with
    # a determined sign, [-lam, lam] on entries at zero.
    sign = np.sign(xm)
    fixed = np.abs(xm) > zero_tol
    lo = np.where(fixed, lam * sign, -lam)
    hi = np.where(fixed, lam * sign, lam)
    np.fill_diagonal(lo, 0.0)
    np.fill_diagonal(hi, 0.0)

    try:
        w, v = np.linalg.eigh(xm)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from exc
    active = w <= delta + active_tol
    basis = v[:, active]

    def project_multiplier(t: np.ndarray) -> np.ndarray:
        if basis.shape[1] == 0:
            return np.zeros_like(t)
        block = basis.T @ t @ basis
        block = 0.5 * (block + block.T)
        bw, bv = np.linalg.eigh(block)
        bw = np.maximum(bw, 0.0)
        out = basis @ ((bv * bw) @ bv.T) @ basis.T
        return 0.5 * (out + out.T)

    multiplier = np.zeros_like(xm)
    residual = np.inf
    for _ in range(max_iters):
        grad = np.clip(multiplier - defect, lo, hi)
        multiplier = project_multiplier(defect + grad)
        new_residual = float(np.linalg.norm(defect + grad - multiplier))
        if abs(residual - new_residual) <= 1e-15 * (1.0 + new_residual):
            residual = new_residual
            break
        residual = new_residual
    return residual
