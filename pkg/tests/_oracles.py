"""Independent oracle implementations used by the test suite.

Everything here is deliberately written from scratch (naive summation
loops, a projected-subgradient solver, scalar arithmetic for the tuning
rates) so it shares no code path with the package implementations it
checks.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from numba import njit


# ---------------------------------------------------------------------------
# Naive sample-estimator formulas (double loops, no shared helpers)


def within_oracle(blocks):
    blocks = [np.asarray(b, dtype=float) for b in blocks]
    p = blocks[0].shape[1]
    m = len(blocks)
    n_total = sum(b.shape[0] for b in blocks)
    acc = np.zeros((p, p))
    for obs in blocks:
        mean = obs.sum(axis=0) / obs.shape[0]
        for row in obs:
            d = row - mean
            acc += np.outer(d, d)
    return acc / (n_total - m)


def aggregated_oracle(blocks):
    blocks = [np.asarray(b, dtype=float) for b in blocks]
    p = blocks[0].shape[1]
    m = len(blocks)
    means = [b.sum(axis=0) / b.shape[0] for b in blocks]
    grand = sum(means) / m
    acc = np.zeros((p, p))
    for mu in means:
        d = mu - grand
        acc += np.outer(d, d)
    return acc / (m - 1)


def between_oracle(blocks):
    m = len(blocks)
    bias = sum(1.0 / (m * b.shape[0]) for b in blocks)
    return aggregated_oracle(blocks) - bias * within_oracle(blocks)


def anova_oracle(blocks):
    blocks = [np.asarray(b, dtype=float) for b in blocks]
    p = blocks[0].shape[1]
    m = len(blocks)
    sizes = [b.shape[0] for b in blocks]
    n_total = sum(sizes)
    n_zero = (n_total - sum(n * n for n in sizes) / n_total) / (m - 1)
    grand = sum(b.sum(axis=0) for b in blocks) / n_total
    acc = np.zeros((p, p))
    for obs, n in zip(blocks, sizes):
        mu = obs.sum(axis=0) / n
        d = mu - grand
        acc += (n / (m - 1)) * np.outer(d, d)
    return (acc - within_oracle(blocks)) / n_zero


# ---------------------------------------------------------------------------
# Tuning-rate arithmetic (scalar, Fractions where exactness matters)


def design_oracle(sizes):
    sizes = [int(n) for n in sizes]
    m = len(sizes)
    n_total = sum(sizes)
    n_star = float(Fraction(m) / sum(Fraction(1, n) for n in sizes))
    n_zero = float(
        (Fraction(n_total) - Fraction(sum(n * n for n in sizes), n_total)) / (m - 1)
    )
    imbalance = float(
        Fraction(max(sizes))
        / ((Fraction(n_total) - Fraction(sum(n * n for n in sizes), n_total)) / (m - 1))
    )
    return m, n_total, n_star, n_zero, imbalance


def lambda_within_oracle(m, n_total, p, c1):
    return c1 * (n_total * math.log(p)) ** 0.5 / (n_total - m)


def lambda_between_oracle(sizes, p, c1, c2, m_b, m_eps):
    m, n_total, n_star, _, _ = design_oracle(sizes)
    return (
        c1 * (math.log(p) / m) ** 0.5
        + c2 * (n_total * math.log(p)) ** 0.5 / ((n_total - m) * n_star)
        + m_b / m
        + m_eps / (m * n_star)
    )


def lambda_aggregated_oracle(sizes, p, c1, m_b, m_eps):
    m, _, n_star, _, _ = design_oracle(sizes)
    return c1 * (math.log(p) / m) ** 0.5 + m_b / m + m_eps / n_star


def lambda_anova_oracle(sizes, p, c1, c2, m_b, m_eps):
    m, n_total, _, n_zero, imbalance = design_oracle(sizes)
    if imbalance == 1.0:
        return lambda_between_oracle(sizes, p, c1, c2, m_b, m_eps)
    return (
        c1 * imbalance * (math.log(p) / m) ** 0.5
        + c2 * (n_total * math.log(p)) ** 0.5 / (n_zero * (n_total - m))
        + (2.0 * n_total - n_zero * m) * m_b / (2.0 * n_zero * m)
        + m_eps / (n_zero * m)
    )


def lambda_aggregated_vs_within_oracle(sizes, p, c1, m_b, m_eps):
    m, _, n_star, _, _ = design_oracle(sizes)
    return c1 * (math.log(p) / m) ** 0.5 + m_b + (2.0 - n_star) * m_eps / (2.0 * n_star)


# ---------------------------------------------------------------------------
# Slow projected-subgradient solver for the penalized floored problem


@njit(cache=True, nogil=True)
def _clamp_eigs(a, floor):
    w, v = np.linalg.eigh(a)
    for k in range(w.shape[0]):
        if w[k] < floor:
            w[k] = floor
    out = (v * w) @ v.T
    return 0.5 * (out + out.T)


@njit(cache=True, nogil=True)
def _subgrad_run(b, lam, delta, iters):
    p = b.shape[0]
    x = _clamp_eigs(b, delta)
    avg = np.zeros((p, p))
    weight_sum = 0.0
    g_max = 0.0
    for t in range(1, iters + 1):
        g = x - b
        for i in range(p):
            for j in range(p):
                if i != j:
                    if x[i, j] > 0.0:
                        g[i, j] += lam
                    elif x[i, j] < 0.0:
                        g[i, j] -= lam
        g_norm = 0.0
        for i in range(p):
            for j in range(p):
                g_norm += g[i, j] * g[i, j]
        g_norm = np.sqrt(g_norm)
        if g_norm > g_max:
            g_max = g_norm
        step = 2.0 / (t + 1.0)
        x = _clamp_eigs(x - step * g, delta)
        w = float(t)
        weight_sum += w
        avg += (w / weight_sum) * (x - avg)
    return avg, g_max


def subgradient_objective(b, x, lam):
    p = b.shape[0]
    quad = 0.5 * float(np.sum((x - b) ** 2))
    pen = 0.0
    for i in range(p):
        for j in range(p):
            if i != j:
                pen += abs(x[i, j])
    return quad + lam * pen


def subgradient_oracle(b, lam, delta, iters=200_000):
    """Weighted-average projected-subgradient solution with a provable
    suboptimality bound: objective(avg) - optimum <= 2 G^2 / (iters + 1)
    for the strongly convex objective (modulus 1)."""
    avg, g_max = _subgrad_run(np.ascontiguousarray(b, dtype=np.float64), lam, delta, iters)
    gap_bound = 2.0 * g_max * g_max / (iters + 1.0)
    return avg, subgradient_objective(b, avg, lam), gap_bound
