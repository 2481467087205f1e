"""Brute-force reference implementations for the estimators.

Every entry of the pairwise kernel matrices is computed by explicit Python
loops over the scalar operations; only the final reductions reuse the same
expressions as the library (sum minus trace over an identically laid-out
matrix), so exact float equality is a meaningful assertion.
"""

from __future__ import annotations

import numpy as np

from condgof import GaussKernel, JointSample, TestLocations, h_p


def stein_gram_loops(model, l: GaussKernel, sample: JointSample) -> np.ndarray:
    n = sample.n
    out = np.empty((n, n))
    for i in range(n):
        zi = (sample.xs[i], sample.ys[i])
        for j in range(n):
            out[i, j] = h_p(model, l, zi, (sample.xs[j], sample.ys[j]))
    return out


def gram_H_loops(model, k: GaussKernel, l: GaussKernel, sample: JointSample) -> np.ndarray:
    n = sample.n
    out = np.empty((n, n))
    for i in range(n):
        zi = (sample.xs[i], sample.ys[i])
        for j in range(n):
            zj = (sample.xs[j], sample.ys[j])
            out[i, j] = k.eval(sample.xs[i], sample.xs[j]) * h_p(model, l, zi, zj)
    return out


def offdiag_matrix(M: np.ndarray) -> np.ndarray:
    out = M.copy()
    np.fill_diagonal(out, 0.0)
    return out


def kcsd_loops(model, k: GaussKernel, l: GaussKernel, sample: JointSample) -> float:
    M = offdiag_matrix(gram_H_loops(model, k, l, sample))
    n = sample.n
    return float(np.sum(M) / (n * (n - 1)))


def location_gram_loops(k: GaussKernel, locations: TestLocations, xs: np.ndarray) -> np.ndarray:
    n = xs.shape[0]
    count = locations.count
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for m in range(count):
                acc += k.eval(xs[i], locations.vs[m]) * k.eval(xs[j], locations.vs[m])
            out[i, j] = acc / count
    return out


def fscd_loops(model, k: GaussKernel, l: GaussKernel, locations: TestLocations, sample: JointSample) -> float:
    M = offdiag_matrix(location_gram_loops(k, locations, sample.xs) * stein_gram_loops(model, l, sample))
    n = sample.n
    return float(np.sum(M) / (n * (n - 1))) / sample.dy


def power_criterion_loops(
    model, k: GaussKernel, l: GaussKernel, locations: TestLocations, sample: JointSample, regularizer: float
) -> float:
    M = offdiag_matrix(location_gram_loops(k, locations, sample.xs) * stein_gram_loops(model, l, sample))
    n = sample.n
    dy = sample.dy
    t_hat = float(np.sum(M) / (n * (n - 1))) / dy
    g = np.empty(n)
    for i in range(n):
        g[i] = np.sum(M[i]) / (n - 1)
    g = g / dy
    g_mean = np.sum(g) / n
    dev = g - g_mean
    var_hat = float(np.sum(dev * dev) / (n - 1))
    return float(t_hat / np.sqrt(4.0 * var_hat + regularizer))


def bootstrap_replicate_loops(gram_matrix: np.ndarray, weights) -> float:
    n = gram_matrix.shape[0]
    wt = [(float(w) - 1.0) / n for w in weights]
    M = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                M[i, j] = (wt[i] * gram_matrix[i, j]) * wt[j]
    return float(n * np.sum(M))
