"""Pure-numpy implementations of the hot numeric kernels.

Reference path for the numba kernels in ``_kernels_numba``; selected at
import time by ``repcov.kernels`` when numba is unavailable or disabled.
Both modules expose the same three functions with identical semantics.
"""

from __future__ import annotations

import numpy as np


def soft_threshold_offdiag_raw(a: np.ndarray, t: float) -> np.ndarray:
    """Entrywise soft threshold off the diagonal; diagonal copied through."""
    out = np.sign(a) * np.maximum(np.abs(a) - t, 0.0)
    np.fill_diagonal(out, np.diagonal(a))
    return out


def psd_floor_raw(a: np.ndarray, delta: float) -> np.ndarray:
    """Eigendecompose and clamp eigenvalues from below at ``delta``."""
    w, v = np.linalg.eigh(a)
    w = np.maximum(w, delta)
    out = (v * w) @ v.T
    return 0.5 * (out + out.T)


def admm_core(
    b: np.ndarray,
    lam: float,
    delta: float,
    rho0: float,
    eps_abs: float,
    eps_rel: float,
    max_iters: int,
    sigma: np.ndarray,
    theta: np.ndarray,
    dual: np.ndarray,
):
    """Alternating-direction loop for the offdiagonal-l1, eigenvalue-floored
    least-squares problem.

    Returns ``(sigma, theta, dual, iters, primal, dual_res, rho, converged)``.
    The caller owns initialization and the fast-path shortcut.
    """
    p = b.shape[0]
    rho = rho0
    sigma = sigma.copy()
    theta = theta.copy()
    dual = dual.copy()
    r_norm = np.inf
    s_norm = np.inf
    r_mark = np.inf
    iters = 0
    converged = False
    for it in range(max_iters):
        sigma = psd_floor_raw((b + rho * theta - dual) / (1.0 + rho), delta)
        theta_new = soft_threshold_offdiag_raw(sigma + dual / rho, lam / rho)
        dual = dual + rho * (sigma - theta_new)
        r_norm = float(np.linalg.norm(sigma - theta_new))
        s_norm = float(rho * np.linalg.norm(theta_new - theta))
        theta = theta_new
        iters = it + 1
        eps_pri = p * eps_abs + eps_rel * max(
            float(np.linalg.norm(sigma)), float(np.linalg.norm(theta))
        )
        eps_dual = p * eps_abs + eps_rel * float(np.linalg.norm(dual))
        if r_norm <= eps_pri and s_norm <= eps_dual:
            converged = True
            break
        # Balance the residuals (factor-10 trigger, factor-2 step). The
        # unscaled dual variable is left as is, which is the rescaling the
        # scaled form would apply.
        if r_norm > 10.0 * s_norm:
            rho = min(rho * 2.0, 1e8)
        elif s_norm > 10.0 * r_norm:
            rho = max(rho / 2.0, 1e-8)
        elif (it + 1) % 150 == 0:
            # Plateau escape: the ratio test can hold rho on degenerate
            # boundary geometry while both residuals shrink glacially.
            if r_norm > 0.5 * r_mark:
                rho = min(rho * 2.0, 1e8)
            r_mark = r_norm
    return sigma, theta, dual, iters, r_norm, s_norm, rho, converged
