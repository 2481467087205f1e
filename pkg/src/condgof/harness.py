"""Experiment harness: seeded rejection-rate studies and criterion landscapes.

Per-trial seeds are a splittable hash of (master seed, trial index), so trials
are independent of execution order and could fan out across workers while
reproducing the sequential results exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import JointSample, TestLocations, load_sample, save_sample  # noqa: F401
from .kernels import GaussKernel
from .models import ProblemSpec, problem_spec
from .optimize import OptConfig, optimize_fscd
from .resampling import (
    TestResult,
    derive_seed,
    resolve_bandwidths,
    run_fscd_test,
    run_kcsd_test,
    run_mmd_baseline,
    sample_random_locations,
)
from .stein import criterion_from_product, location_average_gram, stein_gram

log = logging.getLogger(__name__)

METHODS = ("kcsd", "fscd", "fscd-opt", "mmd")


@dataclass(frozen=True)
class MethodConfig:
    """Which test to run and with what knobs."""

    method: str
    num_locations: int = 5
    bootstrap_reps: int = 400
    train_fraction: float = 0.3
    opt_steps: int = 200
    learning_rate: float = 0.01
    regularizer: float = 1e-6
    bandwidth_policy: object = "median"

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")

    def label(self) -> str:
        if self.method in ("fscd", "fscd-opt"):
            return f"{self.method}-J{self.num_locations}"
        return self.method

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "num_locations": self.num_locations,
            "bootstrap_reps": self.bootstrap_reps,
            "train_fraction": self.train_fraction,
            "opt_steps": self.opt_steps,
            "learning_rate": self.learning_rate,
            "regularizer": self.regularizer,
            "bandwidth_policy": str(self.bandwidth_policy),
        }


def run_single_test(model, sample: JointSample, config: MethodConfig, alpha: float, seed: int) -> TestResult:
    """Dispatch one test on one sample; all internal randomness derives from seed."""
    if config.method == "kcsd":
        result = run_kcsd_test(
            model, sample, alpha=alpha, bootstrap_reps=config.bootstrap_reps,
            seed=derive_seed(seed, 1), bandwidth_policy=config.bandwidth_policy,
        )
    elif config.method == "fscd":
        locations = sample_random_locations(sample, config.num_locations, derive_seed(seed, 0))
        result = run_fscd_test(
            model, sample, locations, alpha=alpha, bootstrap_reps=config.bootstrap_reps,
            seed=derive_seed(seed, 1), bandwidth_policy=config.bandwidth_policy,
        )
    elif config.method == "fscd-opt":
        opt = optimize_fscd(
            sample, model, config.num_locations,
            OptConfig(
                train_fraction=config.train_fraction,
                steps=config.opt_steps,
                learning_rate=config.learning_rate,
                regularizer=config.regularizer,
                seed=derive_seed(seed, 0),
            ),
        )
        inner = run_fscd_test(
            model, opt.test, opt.locations, alpha=alpha, bootstrap_reps=config.bootstrap_reps,
            seed=derive_seed(seed, 1), bandwidth_policy=(opt.sigma_x, opt.sigma_y),
        )
        result = dataclasses.replace(
            inner, method="fscd-opt", meta={**inner.meta, "train_rows": opt.train.n},
        )
    elif config.method == "mmd":
        result = run_mmd_baseline(
            model, sample, alpha=alpha, permutations=config.bootstrap_reps, seed=derive_seed(seed, 1),
        )
    else:
        raise ValueError(f"unknown method {config.method!r}")
    return dataclasses.replace(result, meta={**result.meta, "master_seed": int(seed)})


@dataclass(frozen=True)
class RateRow:
    n: int
    trials: int
    rejections: int

    @property
    def rate(self) -> float:
        return self.rejections / self.trials

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "rejections": self.rejections,
            "rejection_rate": self.rate,
        }


@dataclass(frozen=True)
class ExperimentReport:
    """Rejection rates of one test on one problem across sample sizes.

    Wall-clock numbers are informational only and deliberately excluded from
    the serialized report so that report files are reproducible byte for byte.
    """

    problem: str
    method: str
    alpha: float
    master_seed: int
    rows: tuple
    config: dict
    seconds_per_trial: float = field(default=float("nan"), compare=False)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "method": self.method,
            "alpha": self.alpha,
            "master_seed": self.master_seed,
            "config": dict(self.config),
            "results": [row.to_dict() for row in self.rows],
        }


def rejection_rate(
    problem: ProblemSpec,
    test_config: MethodConfig,
    n: int,
    trials: int,
    alpha: float,
    master_seed: int,
) -> ExperimentReport:
    """Rejection rate over seeded independent trials at one sample size.

    Trial t draws a fresh sample with a seed derived from (master_seed, t)
    and runs the configured test; a failing trial aborts the experiment with
    the trial index attached.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    rejections = 0
    started = time.perf_counter()
    for t in range(trials):
        sample_seed = derive_seed(master_seed, t, 0)
        test_seed = derive_seed(master_seed, t, 1)
        try:
            sample = problem.data_law.sample(n, np.random.default_rng(sample_seed))
            result = run_single_test(problem.model, sample, test_config, alpha, test_seed)
        except Exception as exc:
            raise RuntimeError(f"trial {t} failed for {test_config.label()} at n={n}: {exc}") from exc
        rejections += int(result.reject)
    per_trial = (time.perf_counter() - started) / trials
    log.info(
        "%s on %s at n=%d: %d/%d rejections (%.3f s/trial)",
        test_config.label(), problem.name, n, rejections, trials, per_trial,
    )
    return ExperimentReport(
        problem=problem.name,
        method=test_config.label(),
        alpha=alpha,
        master_seed=master_seed,
        rows=(RateRow(n=n, trials=trials, rejections=rejections),),
        config=test_config.to_dict(),
        seconds_per_trial=per_trial,
    )


def run_experiment(
    problem_name: str,
    test_config: MethodConfig,
    n_list,
    trials: int,
    alpha: float,
    master_seed: int,
) -> ExperimentReport:
    """Rejection rates across a grid of sample sizes, merged into one report."""
    problem = problem_spec(problem_name)
    rows = []
    per_trial = []
    for n in n_list:
        part = rejection_rate(problem, test_config, int(n), trials, alpha, master_seed)
        rows.extend(part.rows)
        per_trial.append(part.seconds_per_trial)
    return ExperimentReport(
        problem=problem.name,
        method=test_config.label(),
        alpha=alpha,
        master_seed=master_seed,
        rows=tuple(rows),
        config={**test_config.to_dict(), "n_list": [int(n) for n in n_list], "trials": trials},
        seconds_per_trial=float(np.mean(per_trial)),
    )


def write_report_csv(report: ExperimentReport, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "trials", "rejections", "rejection_rate"])
        for row in report.rows:
            writer.writerow([row.n, row.trials, row.rejections, format(row.rate, ".17g")])


@dataclass(frozen=True)
class LandscapeTable:
    """Power criterion evaluated on a grid of single test locations."""

    locations: np.ndarray   # (G, dx)
    criteria: np.ndarray    # (G,)
    sigma_x: float
    sigma_y: float

    def argmax_location(self) -> np.ndarray:
        return self.locations[int(np.argmax(self.criteria))]


def powcri_landscape(
    model,
    sample: JointSample,
    grid,
    bandwidth_policy="median",
    regularizer: float = 1e-6,
) -> LandscapeTable:
    """Evaluate the single-location power criterion at each candidate location.

    The Stein gram is computed once on the full sample and reused across the
    grid, so each grid point only costs the location-kernel product.
    """
    locations = np.asarray(grid, dtype=float)
    if locations.ndim == 1:
        locations = locations[:, None]
    if locations.size == 0:
        raise ValueError("grid must be nonempty")
    if locations.shape[1] != sample.dx:
        raise ValueError(f"grid has dimension {locations.shape[1]}, sample has dx={sample.dx}")
    sigma_x, sigma_y = resolve_bandwidths(sample, bandwidth_policy)
    k = GaussKernel(sigma_x)
    l = GaussKernel(sigma_y)
    h = stein_gram(model, l, sample)
    values = np.empty(locations.shape[0])
    for i, v in enumerate(locations):
        kbar = location_average_gram(k, TestLocations(v[None, :]), sample.xs)
        values[i] = criterion_from_product(kbar * h, sample.dy, regularizer)
    return LandscapeTable(locations=locations, criteria=values, sigma_x=sigma_x, sigma_y=sigma_y)


def write_landscape_csv(table: LandscapeTable, path) -> None:
    dx = table.locations.shape[1]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"v{i}" for i in range(1, dx + 1)] + ["criterion"])
        for loc, value in zip(table.locations, table.criteria):
            writer.writerow([format(c, ".17g") for c in loc] + [format(value, ".17g")])
