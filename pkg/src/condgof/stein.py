"""Stein U-statistic kernels and the conditional discrepancy estimators.

The building block is the pairwise kernel

    h((x,y), (x',y')) = l(y,y') s(y|x).s(y'|x')
                        + tr d^2 l / dy dy'
                        + s(y|x) . d l/dy'  +  s(y'|x') . d l/dy

with s the model's conditional score and l a Gaussian kernel on responses.
Smoothing h with a kernel on covariates gives the global statistic; smoothing
with an average of kernel evaluations at fixed test locations gives the
location-based statistic.

The Gram builders are row-vectorized but keep every elementwise expression in
the same shape as the scalar ``h_p``, so a naive double loop over ``h_p``
reproduces them float-for-float.  Off-diagonal totals are pairwise sums over
a zero-diagonal copy of the matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import JointSample, TestLocations
from .kernels import GaussKernel, _cross_from_parts, _gauss, _sqnorm


@dataclass(frozen=True)
class GramH:
    """Materialized n x n matrix of U-statistic kernel values."""

    h: np.ndarray
    diag_valid: bool = field(default=True, compare=False)

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=float)
        object.__setattr__(self, "h", h)
        if h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise ValueError(f"gram must be square, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("gram contains non-finite entries")

    @property
    def n(self) -> int:
        return self.h.shape[0]


def h_p(model, l: GaussKernel, z1, z2) -> float:
    """Stein kernel value for one pair of observations z = (x, y)."""
    x1, y1 = z1
    x2, y2 = z2
    s1 = model.score(x1, y1)
    s2 = model.score(x2, y2)
    y1 = np.atleast_1d(np.asarray(y1, dtype=float))
    y2 = np.atleast_1d(np.asarray(y2, dtype=float))
    d = y1 - y2
    sq = _sqnorm(d)
    lval = _gauss(sq, l.bandwidth)
    bw2 = l.bandwidth * l.bandwidth
    c1 = np.sum(s1 * s2, axis=-1)
    c2 = np.sum(s1 * d, axis=-1) - np.sum(s2 * d, axis=-1)
    return float(lval * c1 + _cross_from_parts(sq, lval, l.bandwidth, d.shape[0]) + (c2 / bw2) * lval)


def stein_gram(model, l: GaussKernel, sample: JointSample) -> np.ndarray:
    """All pairwise Stein kernel values h[i, j] = h_p(z_i, z_j); shape (n, n)."""
    for name, have, want in (("dx", sample.dx, getattr(model, "dx", None)),
                             ("dy", sample.dy, getattr(model, "dy", None))):
        if want is not None and have != want:
            raise ValueError(f"sample has {name}={have} but the model expects {want}")
    Y = sample.ys
    n, dy = Y.shape
    S = model.score_batch(sample.xs, Y)
    bw = l.bandwidth
    bw2 = bw * bw
    out = np.empty((n, n))
    for i in range(n):
        D = Y[i] - Y
        sq = _sqnorm(D)
        lval = _gauss(sq, bw)
        c1 = np.sum(S[i] * S, axis=-1)
        c2 = np.sum(S[i] * D, axis=-1) - np.sum(S * D, axis=-1)
        out[i] = lval * c1 + _cross_from_parts(sq, lval, bw, dy) + (c2 / bw2) * lval
    return out


def gram_H(model, k: GaussKernel, l: GaussKernel, sample: JointSample) -> GramH:
    """Covariate-smoothed Stein gram H[i, j] = k(x_i, x_j) h_p(z_i, z_j)."""
    return GramH(k.eval_matrix(sample.xs, sample.xs) * stein_gram(model, l, sample))


def _zero_diagonal(M: np.ndarray) -> np.ndarray:
    # The off-diagonal reductions sum a zero-diagonal copy instead of
    # subtracting the trace afterwards: adding exact zeros cannot cancel,
    # subtracting a large trace can.
    out = M.copy()
    np.fill_diagonal(out, 0.0)
    return out


def _offdiag_mean(M: np.ndarray) -> float:
    n = M.shape[0]
    return float(np.sum(_zero_diagonal(M)) / (n * (n - 1)))


def _row_projections(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    return np.sum(_zero_diagonal(M), axis=1) / (n - 1)


def kcsd_estimate(gram: GramH) -> float:
    """U-statistic estimate: mean of the off-diagonal gram entries."""
    if gram.n < 2:
        raise ValueError(f"need at least 2 observations, got {gram.n}")
    if not gram.diag_valid:
        raise ValueError("gram diagonal must be valid for the off-diagonal reduction")
    return _offdiag_mean(gram.h)


def location_average_gram(k: GaussKernel, locations: TestLocations, xs: np.ndarray) -> np.ndarray:
    """Averaged rank-one covariate kernel: mean over v of k(x_i, v) k(x_j, v)."""
    # evaluate per location (few rows) rather than per observation (many)
    kv = k.eval_matrix(locations.vs, xs)
    count, n = kv.shape
    acc = np.zeros((n, n))
    for m in range(count):
        col = kv[m]
        acc += col[:, None] * col[None, :]
    return acc / count


def fscd_estimate(model, k: GaussKernel, l: GaussKernel, locations: TestLocations, sample: JointSample) -> float:
    """Location-based discrepancy: the KCSD U-statistic on the location-averaged
    covariate kernel, scaled by 1/dy."""
    if locations.dx != sample.dx:
        raise ValueError(f"locations have dimension {locations.dx}, sample has dx={sample.dx}")
    product = location_average_gram(k, locations, sample.xs) * stein_gram(model, l, sample)
    return kcsd_estimate(GramH(product)) / sample.dy


def power_criterion(
    model,
    k: GaussKernel,
    l: GaussKernel,
    locations: TestLocations,
    sample: JointSample,
    regularizer: float = 1e-6,
) -> float:
    """Signal-to-noise objective for choosing test locations and bandwidths.

    Returns T / sqrt(4 * var + regularizer) where T is the location-based
    U-statistic and var is the sample variance of its first-order projections
    g_i (the plug-in estimate of the asymptotic variance under the
    alternative).

    Raises:
        ZeroDivisionError: the variance estimate is zero and no regularizer
            was supplied.
    """
    if locations.dx != sample.dx:
        raise ValueError(f"locations have dimension {locations.dx}, sample has dx={sample.dx}")
    product = location_average_gram(k, locations, sample.xs) * stein_gram(model, l, sample)
    return criterion_from_product(product, sample.dy, regularizer)


def criterion_from_product(product: np.ndarray, dy: int, regularizer: float) -> float:
    """Power criterion from a precomputed (location kernel x Stein kernel) gram."""
    n = product.shape[0]
    if n < 4:
        raise ValueError(f"need at least 4 observations, got {n}")
    if regularizer < 0:
        raise ValueError(f"regularizer must be nonnegative, got {regularizer}")
    off = _zero_diagonal(product)
    t_hat = float(np.sum(off) / (n * (n - 1))) / dy
    g = np.sum(off, axis=1) / (n - 1) / dy
    g_mean = np.sum(g) / n
    dev = g - g_mean
    var_hat = float(np.sum(dev * dev) / (n - 1))
    denom_sq = 4.0 * var_hat + regularizer
    if denom_sq <= 0.0:
        raise ZeroDivisionError("variance estimate is zero and the regularizer is zero")
    return float(t_hat / np.sqrt(denom_sq))


def stein_feature(model, l: GaussKernel, x, y, w) -> np.ndarray:
    """The response-space Stein feature l(y, w) s(y|x) + d/dy l(y, w).

    Its expectation over y ~ p(.|x) is zero for every probe point w, which is
    the identity the discrepancies are built on.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    score = model.score(x, y)
    lval = _gauss(_sqnorm(y - w), l.bandwidth)
    return lval * score + ((w - y) / (l.bandwidth * l.bandwidth)) * lval


def stein_feature_batch(model, l: GaussKernel, x, Y: np.ndarray, w) -> np.ndarray:
    """`stein_feature` for many y at a fixed conditioning point; returns (n, dy)."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    X = np.repeat(np.atleast_2d(np.asarray(x, dtype=float)), Y.shape[0], axis=0)
    S = model.score_batch(X, Y)
    lval = _gauss(_sqnorm(Y - w), l.bandwidth)[:, None]
    return lval * S + ((w - Y) / (l.bandwidth * l.bandwidth)) * lval
