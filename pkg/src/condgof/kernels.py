"""Gaussian kernel primitives and the median-heuristic bandwidth selector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist


class DegenerateDataError(ValueError):
    """Data cannot support a bandwidth choice (too few or coincident points)."""


def _sqnorm(diff: np.ndarray):
    # Trailing-axis reduction; used by both the scalar and the row-vectorized
    # paths so that the two produce bit-identical floats.
    return np.sum(diff * diff, axis=-1)


def _gauss(sq, bandwidth: float):
    return np.exp(-sq / (2.0 * bandwidth * bandwidth))


def _cross_from_parts(sq, lval, bandwidth: float, dim: int):
    bw2 = bandwidth * bandwidth
    return lval * (dim / bw2 - sq / (bw2 * bw2))


def as_points(points) -> np.ndarray:
    """Coerce input to an (n, d) float array; 1-D input becomes a column."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"expected a vector or a matrix of points, got shape {arr.shape}")
    return arr


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 0:
        arr = arr[None]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class GaussKernel:
    """Isotropic Gaussian kernel ``exp(-||a - b||^2 / (2 * bandwidth^2))``."""

    bandwidth: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.bandwidth) or self.bandwidth <= 0:
            raise ValueError(f"bandwidth must be positive and finite, got {self.bandwidth}")

    def eval(self, a, b) -> float:
        a = _as_vector(a, "a")
        b = _as_vector(b, "b")
        if a.shape != b.shape:
            raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
        return float(_gauss(_sqnorm(a - b), self.bandwidth))

    def eval_matrix(self, A, B) -> np.ndarray:
        """Kernel values for all row pairs; returns shape (len(A), len(B))."""
        A = as_points(A)
        B = as_points(B)
        if A.shape[1] != B.shape[1]:
            raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
        out = np.empty((A.shape[0], B.shape[0]))
        for i in range(A.shape[0]):
            out[i] = _gauss(_sqnorm(A[i] - B), self.bandwidth)
        return out

    def grad_second(self, y, y2) -> np.ndarray:
        """Gradient of ``eval(y, .)`` with respect to its second argument at y2."""
        y = _as_vector(y, "y")
        y2 = _as_vector(y2, "y2")
        if y.shape != y2.shape:
            raise ValueError(f"dimension mismatch: {y.shape} vs {y2.shape}")
        d = y - y2
        lval = _gauss(_sqnorm(d), self.bandwidth)
        return (d / (self.bandwidth * self.bandwidth)) * lval

    def cross_trace(self, y, y2) -> float:
        """Trace of the mixed second derivative matrix d^2 eval / dy dy2."""
        y = _as_vector(y, "y")
        y2 = _as_vector(y2, "y2")
        if y.shape != y2.shape:
            raise ValueError(f"dimension mismatch: {y.shape} vs {y2.shape}")
        sq = _sqnorm(y - y2)
        lval = _gauss(sq, self.bandwidth)
        return float(_cross_from_parts(sq, lval, self.bandwidth, y.shape[0]))


def median_heuristic(points, max_points: int = 5000, seed: int = 0) -> float:
    """Median of pairwise Euclidean distances over distinct unordered pairs.

    The median of an even-length distance list is the lower middle order
    statistic, not the average of the two middle elements.  For more than
    ``max_points`` points a seeded uniform subsample is used to keep the
    O(n^2) pair enumeration bounded.

    Raises:
        DegenerateDataError: fewer than two points, or the median pairwise
            distance is zero (in particular when all points coincide).
    """
    pts = as_points(points)
    n = pts.shape[0]
    if n < 2:
        raise DegenerateDataError(f"median heuristic needs at least 2 points, got {n}")
    if n > max_points:
        idx = np.random.default_rng(seed).choice(n, size=max_points, replace=False)
        pts = pts[idx]
    dists = pdist(pts)
    k = (dists.shape[0] - 1) // 2
    med = float(np.partition(dists, k)[k])
    if med <= 0.0:
        if not np.any(dists > 0.0):
            raise DegenerateDataError("all pairwise distances are zero")
        raise DegenerateDataError("median pairwise distance is zero (too many duplicate points)")
    return med
