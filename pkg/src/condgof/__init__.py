"""Goodness-of-fit testing for conditional density models.

Two complementary statistics are provided: a global kernel discrepancy built
from a conditional Stein operator, and a location-based variant that probes
the conditional fit at a finite set of covariate points and can be optimized
to report where a model fits poorly.  Both are calibrated with a multinomial
weighted bootstrap; a sampling-based two-sample (MMD) baseline and a
reproduction harness for the synthetic benchmarks round out the package.
"""

from .data import JointSample, SampleFormatError, TestLocations, load_sample, save_sample
from .harness import (
    ExperimentReport,
    LandscapeTable,
    MethodConfig,
    powcri_landscape,
    rejection_rate,
    run_experiment,
    run_single_test,
)
from .kernels import DegenerateDataError, GaussKernel, median_heuristic
from .models import (
    CondGaussMixtureModel,
    ConditionalModel,
    GaussianCovariates,
    HeteroGaussianModel,
    JointLaw,
    LinearGaussianModel,
    ModelConfigError,
    ProblemSpec,
    QuadGaussianModel,
    UniformCovariates,
    load_model,
    load_model_file,
    make_problem,
    problem_spec,
)
from .optimize import (
    CriterionGradient,
    OptConfig,
    OptimizationResult,
    criterion_gradient,
    optimize_fscd,
    split,
)
from .resampling import (
    TestResult,
    bootstrap_replicate,
    bootstrap_replicates,
    derive_seed,
    empirical_threshold,
    run_fscd_test,
    run_kcsd_test,
    run_mmd_baseline,
    sample_random_locations,
)
from .stein import (
    GramH,
    fscd_estimate,
    gram_H,
    h_p,
    kcsd_estimate,
    location_average_gram,
    power_criterion,
    stein_feature,
    stein_feature_batch,
    stein_gram,
)

__version__ = "0.1.0"

__all__ = [
    "CondGaussMixtureModel",
    "ConditionalModel",
    "CriterionGradient",
    "DegenerateDataError",
    "ExperimentReport",
    "GaussKernel",
    "GaussianCovariates",
    "GramH",
    "HeteroGaussianModel",
    "JointLaw",
    "JointSample",
    "LandscapeTable",
    "LinearGaussianModel",
    "MethodConfig",
    "ModelConfigError",
    "OptConfig",
    "OptimizationResult",
    "ProblemSpec",
    "QuadGaussianModel",
    "SampleFormatError",
    "TestLocations",
    "TestResult",
    "UniformCovariates",
    "bootstrap_replicate",
    "bootstrap_replicates",
    "criterion_gradient",
    "derive_seed",
    "empirical_threshold",
    "fscd_estimate",
    "gram_H",
    "h_p",
    "kcsd_estimate",
    "load_model",
    "load_model_file",
    "load_sample",
    "location_average_gram",
    "make_problem",
    "median_heuristic",
    "optimize_fscd",
    "powcri_landscape",
    "power_criterion",
    "problem_spec",
    "rejection_rate",
    "run_experiment",
    "run_fscd_test",
    "run_kcsd_test",
    "run_mmd_baseline",
    "run_single_test",
    "sample_random_locations",
    "save_sample",
    "split",
    "stein_feature",
    "stein_feature_batch",
    "stein_gram",
]
