"""Weighted-bootstrap calibration and the end-to-end test runners.

The U-statistics here are degenerate under the null, so their null
distribution is simulated with a multinomial weighted bootstrap: draw counts
w ~ Multinomial(n; 1/n, ..., 1/n), center them as (w_i - 1)/n, and recompute
the quadratic form on the cached gram.  Each replicate gets its own generator
derived from (seed, replicate index), so a parallel evaluation would
reproduce the sequential replicate vector bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .data import JointSample, TestLocations
from .kernels import GaussKernel, median_heuristic
from .stein import GramH, _offdiag_mean, gram_H, location_average_gram, stein_gram


@dataclass(frozen=True)
class TestResult:
    """Outcome of one hypothesis test run."""

    __test__ = False  # not a pytest class, despite the name

    statistic: float
    threshold: float
    p_value: float
    reject: bool
    alpha: float
    n_used: int
    bootstrap_reps: int
    seed: int
    method: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "n_used": self.n_used,
            "bootstrap_reps": self.bootstrap_reps,
            "seed": self.seed,
        }
        out.update(self.meta)
        return out


def derive_seed(*parts: int) -> int:
    """Deterministic 64-bit seed from integer parts (splittable, order-sensitive)."""
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, np.uint64)[0])


def bootstrap_replicate(gram: GramH, weights: Sequence[int]) -> float:
    """One weighted-bootstrap value n * sum_{i != j} wt_i wt_j h[i, j].

    ``weights`` are multinomial counts summing to n; wt_i = (w_i - 1) / n.
    The result is on the same scale as the n-scaled test statistic.
    """
    w = np.asarray(weights)
    n = gram.n
    if w.shape != (n,):
        raise ValueError(f"weights must have shape ({n},), got {w.shape}")
    if int(np.sum(w)) != n:
        raise ValueError(f"weights must sum to n={n}, got {int(np.sum(w))}")
    wt = (w - 1.0) / n
    m = wt[:, None] * gram.h
    m *= wt[None, :]
    np.fill_diagonal(m, 0.0)
    return float(n * np.sum(m))


def bootstrap_replicates(gram: GramH, reps: int, seed: int) -> np.ndarray:
    """The full replicate vector for a cached gram; reproducible given the seed."""
    if reps < 1:
        raise ValueError(f"need at least one replicate, got {reps}")
    n = gram.n
    probs = np.full(n, 1.0 / n)
    out = np.empty(reps)
    for b, child in enumerate(np.random.SeedSequence(seed).spawn(reps)):
        rng = np.random.default_rng(child)
        out[b] = bootstrap_replicate(gram, rng.multinomial(n, probs))
    return out


def empirical_threshold(replicates: np.ndarray, alpha: float) -> float:
    """(1 - alpha) empirical quantile as the order statistic at ceil((1-alpha) m)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    reps = np.asarray(replicates, dtype=float)
    m = reps.shape[0]
    k = min(max(math.ceil((1.0 - alpha) * m), 1), m)
    return float(np.partition(reps, k - 1)[k - 1])


def _p_value(replicates: np.ndarray, statistic: float) -> float:
    m = replicates.shape[0]
    return float((1 + np.count_nonzero(replicates >= statistic)) / (1 + m))


def resolve_bandwidths(sample: JointSample, policy) -> tuple[float, float]:
    """Bandwidths for the covariate and response kernels.

    ``policy`` is either the string "median" (median heuristic on xs and on
    ys separately) or an explicit (sigma_x, sigma_y) pair.
    """
    if policy is None or policy == "median":
        return median_heuristic(sample.xs), median_heuristic(sample.ys)
    sigma_x, sigma_y = policy
    return float(sigma_x), float(sigma_y)


def _finish(statistic: float, replicates: np.ndarray, alpha: float, n_used: int,
            seed: int, method: str, meta: dict) -> TestResult:
    threshold = empirical_threshold(replicates, alpha)
    return TestResult(
        statistic=float(statistic),
        threshold=threshold,
        p_value=_p_value(replicates, statistic),
        reject=bool(statistic > threshold),
        alpha=float(alpha),
        n_used=int(n_used),
        bootstrap_reps=int(replicates.shape[0]),
        seed=int(seed),
        method=method,
        meta=meta,
    )


def run_kcsd_test(
    model,
    sample: JointSample,
    alpha: float = 0.05,
    bootstrap_reps: int = 400,
    seed: int = 0,
    bandwidth_policy="median",
) -> TestResult:
    """Global conditional goodness-of-fit test; statistic is n times the U-statistic."""
    if sample.n < 4:
        raise ValueError(f"need n >= 4, got {sample.n}")
    sigma_x, sigma_y = resolve_bandwidths(sample, bandwidth_policy)
    gram = gram_H(model, GaussKernel(sigma_x), GaussKernel(sigma_y), sample)
    statistic = sample.n * _offdiag_mean(gram.h)
    replicates = bootstrap_replicates(gram, bootstrap_reps, seed)
    meta = {"sigma_x": sigma_x, "sigma_y": sigma_y}
    return _finish(statistic, replicates, alpha, sample.n, seed, "kcsd", meta)


def run_fscd_test(
    model,
    sample: JointSample,
    locations: TestLocations,
    alpha: float = 0.05,
    bootstrap_reps: int = 400,
    seed: int = 0,
    bandwidth_policy="median",
) -> TestResult:
    """Location-based conditional goodness-of-fit test at fixed test locations."""
    if sample.n < 4:
        raise ValueError(f"need n >= 4, got {sample.n}")
    if locations.dx != sample.dx:
        raise ValueError(f"locations have dimension {locations.dx}, sample has dx={sample.dx}")
    sigma_x, sigma_y = resolve_bandwidths(sample, bandwidth_policy)
    k = GaussKernel(sigma_x)
    l = GaussKernel(sigma_y)
    product = location_average_gram(k, locations, sample.xs) * stein_gram(model, l, sample)
    statistic = sample.n * (_offdiag_mean(product) / sample.dy)
    gram = GramH(product / sample.dy)
    replicates = bootstrap_replicates(gram, bootstrap_reps, seed)
    meta = {
        "sigma_x": sigma_x,
        "sigma_y": sigma_y,
        "num_locations": locations.count,
        "location_jitter": locations.jitter_applied,
    }
    return _finish(statistic, replicates, alpha, sample.n, seed, "fscd", meta)


def sample_random_locations(sample: JointSample, count: int, seed: int) -> TestLocations:
    """Draw test locations from a Gaussian fitted to the covariates by maximum
    likelihood (mean = column means, covariance with denominator n).

    A singular fitted covariance gets a 1e-8 diagonal jitter; the returned
    locations record that this happened.
    """
    if count < 1:
        raise ValueError(f"need at least one location, got {count}")
    xs = sample.xs
    mean = np.mean(xs, axis=0)
    centered = xs - mean
    cov = centered.T @ centered / sample.n
    jittered = False
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        jittered = True
        chol = np.linalg.cholesky(cov + 1e-8 * np.eye(sample.dx))
    draws = np.random.default_rng(seed).standard_normal((count, sample.dx))
    return TestLocations(mean + draws @ chol.T, jitter_applied=jittered)


def _mmd2_unbiased(K: np.ndarray, idx_a: np.ndarray, idx_b: np.ndarray) -> float:
    Kaa = K[np.ix_(idx_a, idx_a)]
    Kbb = K[np.ix_(idx_b, idx_b)]
    Kab = K[np.ix_(idx_a, idx_b)]
    na = idx_a.shape[0]
    nb = idx_b.shape[0]
    term_a = (np.sum(Kaa) - np.trace(Kaa)) / (na * (na - 1))
    term_b = (np.sum(Kbb) - np.trace(Kbb)) / (nb * (nb - 1))
    return float(term_a + term_b - 2.0 * np.sum(Kab) / (na * nb))


def run_mmd_baseline(
    model,
    sample: JointSample,
    alpha: float = 0.05,
    permutations: int = 400,
    seed: int = 0,
) -> TestResult:
    """Sampling-based baseline: a two-sample kernel test against model draws.

    The sample is split into two disjoint halves (the first half takes the
    extra row when n is odd).  Responses for the second half are replaced by
    draws from the model conditioned on its covariates, and an unbiased
    squared-MMD two-sample test compares the first half against the
    synthesized pairs.  The kernel is a product of Gaussian kernels on the
    covariate and response coordinates with median-heuristic bandwidths; the
    null distribution comes from permuting the pooled rows.
    """
    n = sample.n
    if n < 8:
        raise ValueError(f"need n >= 8 for the split baseline, got {n}")
    n1 = (n + 1) // 2
    xs1, ys1 = sample.xs[:n1], sample.ys[:n1]
    xs2 = sample.xs[n1:]
    seeds = np.random.SeedSequence(seed).spawn(permutations + 1)
    ys2 = model.sample_batch(xs2, np.random.default_rng(seeds[0]))

    pooled_x = np.vstack([xs1, xs2])
    pooled_y = np.vstack([ys1, ys2])
    sigma_x = median_heuristic(pooled_x)
    sigma_y = median_heuristic(pooled_y)
    kx = GaussKernel(sigma_x)
    ky = GaussKernel(sigma_y)
    K = kx.eval_matrix(pooled_x, pooled_x) * ky.eval_matrix(pooled_y, pooled_y)

    idx_a = np.arange(n1)
    idx_b = np.arange(n1, n)
    statistic = _mmd2_unbiased(K, idx_a, idx_b)
    replicates = np.empty(permutations)
    for b in range(permutations):
        perm = np.random.default_rng(seeds[b + 1]).permutation(n)
        replicates[b] = _mmd2_unbiased(K, perm[:n1], perm[n1:])
    meta = {"sigma_x": sigma_x, "sigma_y": sigma_y, "split_sizes": [int(n1), int(n - n1)]}
    return _finish(statistic, replicates, alpha, n, seed, "mmd", meta)
