"""Conditional density models exposed through their score functions.

Every model here knows ``d/dy log p(y|x)`` in closed form and can draw from
``p(.|x)``, which is all the discrepancy estimators and the sampling baseline
need; normalizing constants are never computed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import JointSample
from .kernels import _gauss, _sqnorm, as_points


class ModelConfigError(ValueError):
    """A model configuration document is malformed or violates an invariant."""


class ConditionalModel:
    """Base class for conditional density models p(y|x).

    Subclasses provide batched score and sampling; the single-point variants
    delegate to batches of one so both paths share the same arithmetic.
    """

    kind: str = ""
    dx: int = 0
    dy: int = 0

    def score_batch(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Conditional score d/dy log p(y|x) for each row; returns (n, dy)."""
        raise NotImplementedError

    def sample_batch(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One draw y_i ~ p(.|x_i) per row of X; returns (n, dy)."""
        raise NotImplementedError

    def score(self, x, y) -> np.ndarray:
        X, Y = self._check_pair(x, y)
        return self.score_batch(X, Y)[0]

    def sample(self, x, rng: np.random.Generator) -> np.ndarray:
        X = self._check_x(x)
        return self.sample_batch(X, rng)[0]

    def _check_x(self, x) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.ndim == 0:
            arr = arr[None]
        if arr.ndim != 1 or arr.size != self.dx:
            raise ValueError(f"{self.kind}: x has shape {arr.shape}, expected a vector of length {self.dx}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{self.kind}: x contains non-finite entries")
        return arr[None, :]

    def _check_pair(self, x, y) -> tuple[np.ndarray, np.ndarray]:
        X = self._check_x(x)
        arr = np.asarray(y, dtype=float)
        if arr.ndim == 0:
            arr = arr[None]
        if arr.ndim != 1 or arr.size != self.dy:
            raise ValueError(f"{self.kind}: y has shape {arr.shape}, expected a vector of length {self.dy}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{self.kind}: y contains non-finite entries")
        return X, arr[None, :]


class _GaussianConditional(ConditionalModel):
    """Gaussian p(y|x) = N(mean(x), var(x)) with scalar response."""

    dy = 1

    def _mean(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _var(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def score_batch(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        X = as_points(X)
        Y = as_points(Y)
        return ((self._mean(X) - Y[:, 0]) / self._var(X))[:, None]

    def sample_batch(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        X = as_points(X)
        noise = rng.standard_normal(X.shape[0])
        return (self._mean(X) + np.sqrt(self._var(X)) * noise)[:, None]


class LinearGaussianModel(_GaussianConditional):
    """y | x ~ N(coeffs . x + intercept, noise_var)."""

    kind = "linear_gaussian"

    def __init__(self, coeffs, intercept: float = 0.0, noise_var: float = 1.0):
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.ndim != 1 or self.coeffs.size == 0:
            raise ValueError("coeffs must be a non-empty vector")
        if not np.isfinite(noise_var) or noise_var <= 0:
            raise ValueError(f"noise_var must be positive, got {noise_var}")
        self.intercept = float(intercept)
        self.noise_var = float(noise_var)
        self.dx = self.coeffs.size

    def _mean(self, X: np.ndarray) -> np.ndarray:
        return np.sum(X * self.coeffs, axis=-1) + self.intercept

    def _var(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.noise_var)


class HeteroGaussianModel(_GaussianConditional):
    """Linear mean with an x-dependent variance bump.

    var(x) = base_var + bump_height * exp(-||x - bump_center||^2 / (2 bump_width^2))
    """

    kind = "hetero_gaussian"

    def __init__(self, coeffs, base_var: float, bump_height: float, bump_center, bump_width: float):
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.bump_center = np.asarray(bump_center, dtype=float)
        if self.coeffs.ndim != 1 or self.coeffs.size == 0:
            raise ValueError("coeffs must be a non-empty vector")
        if self.bump_center.shape != self.coeffs.shape:
            raise ValueError(
                f"bump_center has dimension {self.bump_center.size}, expected {self.coeffs.size}"
            )
        if not np.isfinite(base_var) or base_var <= 0:
            raise ValueError(f"base_var must be positive, got {base_var}")
        if not np.isfinite(bump_height) or bump_height < 0:
            raise ValueError(f"bump_height must be nonnegative, got {bump_height}")
        if not np.isfinite(bump_width) or bump_width <= 0:
            raise ValueError(f"bump_width must be positive, got {bump_width}")
        self.base_var = float(base_var)
        self.bump_height = float(bump_height)
        self.bump_width = float(bump_width)
        self.dx = self.coeffs.size

    def _mean(self, X: np.ndarray) -> np.ndarray:
        return np.sum(X * self.coeffs, axis=-1)

    def _var(self, X: np.ndarray) -> np.ndarray:
        return self.base_var + self.bump_height * _gauss(_sqnorm(X - self.bump_center), self.bump_width)


class QuadGaussianModel(_GaussianConditional):
    """Univariate y | x ~ N(a x^2 + b x + c, noise_var)."""

    kind = "quad_gaussian"
    dx = 1

    def __init__(self, a: float, b: float, c: float, noise_var: float = 1.0):
        if not np.isfinite(noise_var) or noise_var <= 0:
            raise ValueError(f"noise_var must be positive, got {noise_var}")
        if not all(np.isfinite(v) for v in (a, b, c)):
            raise ValueError("mean coefficients must be finite")
        self.a = float(a)
        self.b = float(b)
        self.c = float(c)
        self.noise_var = float(noise_var)

    def _mean(self, X: np.ndarray) -> np.ndarray:
        x = X[:, 0]
        return self.a * x * x + self.b * x + self.c

    def _var(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.noise_var)


class CondGaussMixtureModel(ConditionalModel):
    """Gaussian mixture in y with x-independent parameters.

    p(y|x) = sum_c weight_c N(y | mean_c, diag(vars_c)); the score ignores x
    but the covariate dimension is kept so shape checks stay meaningful.
    """

    kind = "cond_gauss_mixture"

    def __init__(self, weights, means, variances, dx: int = 1):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.atleast_2d(np.asarray(means, dtype=float))
        self.variances = np.atleast_2d(np.asarray(variances, dtype=float))
        if self.weights.ndim != 1 or self.weights.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {float(np.sum(self.weights))!r}")
        if self.means.shape[0] != self.weights.size or self.variances.shape != self.means.shape:
            raise ValueError(
                f"inconsistent component shapes: weights {self.weights.shape}, "
                f"means {self.means.shape}, vars {self.variances.shape}"
            )
        if np.any(self.variances <= 0) or not np.all(np.isfinite(self.variances)):
            raise ValueError("component variances must be positive and finite")
        if dx < 1:
            raise ValueError(f"dx must be a positive integer, got {dx}")
        self.dx = int(dx)
        self.dy = self.means.shape[1]
        with np.errstate(divide="ignore"):
            self._log_weights = np.where(self.weights > 0, np.log(self.weights), -np.inf)

    def score_batch(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        Y = as_points(Y)
        diff = Y[:, None, :] - self.means          # (n, C, dy)
        log_comp = (
            self._log_weights
            - 0.5 * np.sum(diff * diff / self.variances + np.log(2.0 * np.pi * self.variances), axis=2)
        )
        top = np.max(log_comp, axis=1, keepdims=True)
        shifted = np.exp(log_comp - top)
        total = np.maximum(np.sum(shifted, axis=1, keepdims=True), 1e-300)
        resp = shifted / total                      # (n, C)
        comp_score = -diff / self.variances         # (n, C, dy)
        return np.sum(resp[:, :, None] * comp_score, axis=1)

    def sample_batch(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        X = as_points(X)
        n = X.shape[0]
        comp = rng.choice(self.weights.size, size=n, p=self.weights)
        noise = rng.standard_normal((n, self.dy))
        return self.means[comp] + np.sqrt(self.variances[comp]) * noise


# --------------------------------------------------------------------------
# Covariate laws and joint data-generating laws


@dataclass(frozen=True)
class GaussianCovariates:
    """x ~ N(mean, std^2 I)."""

    mean: np.ndarray
    std: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))

    @property
    def dx(self) -> int:
        return self.mean.size

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.mean + self.std * rng.standard_normal((n, self.dx))


@dataclass(frozen=True)
class UniformCovariates:
    """x ~ Uniform on the open box (low, high)^dx; boundary draws are rejected."""

    low: float
    high: float
    dx: int = 1

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = rng.uniform(self.low, self.high, size=(n, self.dx))
        inside = (out > self.low) & (out < self.high)
        while not np.all(inside):
            bad = ~inside
            out[bad] = rng.uniform(self.low, self.high, size=int(np.count_nonzero(bad)))
            inside = (out > self.low) & (out < self.high)
        return out


@dataclass(frozen=True)
class JointLaw:
    """Data-generating law: covariates from r_x, responses from r(y|x)."""

    covariates: object
    conditional: ConditionalModel

    def sample(self, n: int, rng: np.random.Generator) -> JointSample:
        X = self.covariates.sample(n, rng)
        Y = self.conditional.sample_batch(X, rng)
        return JointSample(X, Y)


@dataclass(frozen=True)
class ProblemSpec:
    """A named benchmark: null model, data law, and whether the null is true."""

    name: str
    model: ConditionalModel
    data_law: JointLaw
    h0_true: bool


def _lgm_spec() -> ProblemSpec:
    model = LinearGaussianModel(coeffs=[1.0, 2.0, 3.0, 4.0, 5.0], noise_var=1.0)
    law = JointLaw(GaussianCovariates(np.zeros(5)), model)
    return ProblemSpec("lgm", model, law, h0_true=True)


def _hgm_spec() -> ProblemSpec:
    model = HeteroGaussianModel(
        coeffs=[1.0, 1.0, 1.0],
        base_var=1.0,
        bump_height=10.0,
        bump_center=np.full(3, 2.0 / 3.0),
        bump_width=0.8,
    )
    data_model = LinearGaussianModel(coeffs=[1.0, 1.0, 1.0], noise_var=1.0)
    law = JointLaw(GaussianCovariates(np.zeros(3)), data_model)
    return ProblemSpec("hgm", model, law, h0_true=False)


def _qgm_spec() -> ProblemSpec:
    model = QuadGaussianModel(a=0.0, b=1.0, c=1.0, noise_var=1.0)
    data_model = QuadGaussianModel(a=0.1, b=1.0, c=1.0, noise_var=1.0)
    law = JointLaw(UniformCovariates(-2.0, 2.0), data_model)
    return ProblemSpec("qgm", model, law, h0_true=False)


def _hgm1d_spec() -> ProblemSpec:
    # Univariate heteroscedastic variant: the model variance has a sharp bump
    # at x = 1 while the data-generating noise is homoscedastic.
    model = HeteroGaussianModel(
        coeffs=[1.0], base_var=1.0, bump_height=8.0, bump_center=[1.0], bump_width=0.3
    )
    data_model = LinearGaussianModel(coeffs=[1.0], noise_var=1.0)
    law = JointLaw(GaussianCovariates(np.zeros(1)), data_model)
    return ProblemSpec("hgm1d", model, law, h0_true=False)


def _qgm1d_spec() -> ProblemSpec:
    # Univariate quadratic-mean variant with a slight coefficient mismatch.
    model = QuadGaussianModel(a=0.5, b=1.0, c=-1.0, noise_var=1.0)
    data_model = QuadGaussianModel(a=0.4, b=1.0, c=-1.0, noise_var=1.0)
    law = JointLaw(GaussianCovariates(np.array([2.0])), data_model)
    return ProblemSpec("qgm1d", model, law, h0_true=False)


def _meanshift1d_spec() -> ProblemSpec:
    # Model mean x/2 against data mean x; a globally wrong regression slope.
    model = LinearGaussianModel(coeffs=[0.5], noise_var=1.0)
    data_model = LinearGaussianModel(coeffs=[1.0], noise_var=1.0)
    law = JointLaw(GaussianCovariates(np.zeros(1)), data_model)
    return ProblemSpec("meanshift1d", model, law, h0_true=False)


_PROBLEMS = {
    "lgm": _lgm_spec,
    "hgm": _hgm_spec,
    "qgm": _qgm_spec,
    "hgm1d": _hgm1d_spec,
    "qgm1d": _qgm1d_spec,
    "meanshift1d": _meanshift1d_spec,
}

PROBLEM_NAMES = tuple(sorted(_PROBLEMS))


def problem_spec(name: str) -> ProblemSpec:
    """Look up a built-in benchmark problem by name."""
    try:
        builder = _PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; available: {', '.join(PROBLEM_NAMES)}") from None
    return builder()


def make_problem(name: str, n: int, seed: int) -> tuple[ProblemSpec, JointSample]:
    """Build a benchmark problem and draw a seeded sample of size n from its data law."""
    if n < 4:
        raise ValueError(f"need n >= 4, got {n}")
    spec = problem_spec(name)
    sample = spec.data_law.sample(n, np.random.default_rng(seed))
    return spec, sample


# --------------------------------------------------------------------------
# Model configuration documents


def _require(cfg: dict, key: str, kind: str):
    if key not in cfg:
        raise ModelConfigError(f"{kind}.{key}: missing required field")
    return cfg[key]


def _number(value, path: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ModelConfigError(f"{path}: expected a number, got {value!r}") from None
    if not np.isfinite(value):
        raise ModelConfigError(f"{path}: must be finite, got {value!r}")
    return value


def _positive(value, path: str) -> float:
    value = _number(value, path)
    if value <= 0:
        raise ModelConfigError(f"{path}: must be a positive finite number, got {value!r}")
    return value


def _vector(value, path: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ModelConfigError(f"{path}: expected a list of numbers") from None
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ModelConfigError(f"{path}: expected a non-empty list of finite numbers")
    return arr


def _check_dims(cfg: dict, model: ConditionalModel) -> ConditionalModel:
    for key, actual in (("dx", model.dx), ("dy", model.dy)):
        if key not in cfg:
            continue
        try:
            declared = int(cfg[key])
        except (TypeError, ValueError):
            raise ModelConfigError(f"{key}: expected an integer, got {cfg[key]!r}") from None
        if declared != actual:
            raise ModelConfigError(f"{key}: declared {declared} but parameters imply {actual}")
    return model


def load_model(config: dict) -> ConditionalModel:
    """Build a validated model from a parsed configuration tree."""
    if not isinstance(config, dict):
        raise ModelConfigError(f"top level: expected a mapping, got {type(config).__name__}")
    kind = config.get("kind")
    if kind is None:
        raise ModelConfigError("kind: missing required field")

    if kind == "linear_gaussian":
        model = LinearGaussianModel(
            coeffs=_vector(_require(config, "coeffs", kind), f"{kind}.coeffs"),
            intercept=_number(config.get("intercept", 0.0), f"{kind}.intercept"),
            noise_var=_positive(_require(config, "noise_var", kind), f"{kind}.noise_var"),
        )
    elif kind == "hetero_gaussian":
        coeffs = _vector(_require(config, "coeffs", kind), f"{kind}.coeffs")
        center = _vector(_require(config, "bump_center", kind), f"{kind}.bump_center")
        if center.size != coeffs.size:
            raise ModelConfigError(
                f"{kind}.bump_center: dimension {center.size} does not match coeffs ({coeffs.size})"
            )
        height = _number(_require(config, "bump_height", kind), f"{kind}.bump_height")
        if height < 0:
            raise ModelConfigError(f"{kind}.bump_height: must be nonnegative, got {height!r}")
        model = HeteroGaussianModel(
            coeffs=coeffs,
            base_var=_positive(_require(config, "base_var", kind), f"{kind}.base_var"),
            bump_height=height,
            bump_center=center,
            bump_width=_positive(_require(config, "bump_width", kind), f"{kind}.bump_width"),
        )
    elif kind == "quad_gaussian":
        model = QuadGaussianModel(
            a=_number(_require(config, "a", kind), f"{kind}.a"),
            b=_number(_require(config, "b", kind), f"{kind}.b"),
            c=_number(_require(config, "c", kind), f"{kind}.c"),
            noise_var=_positive(_require(config, "noise_var", kind), f"{kind}.noise_var"),
        )
    elif kind == "cond_gauss_mixture":
        components = _require(config, "components", kind)
        if not isinstance(components, list) or not components:
            raise ModelConfigError(f"{kind}.components: expected a non-empty list")
        weights, means, variances = [], [], []
        for i, comp in enumerate(components):
            where = f"{kind}.components[{i}]"
            if not isinstance(comp, dict):
                raise ModelConfigError(f"{where}: expected a mapping")
            for field_name in ("weight", "mean", "vars"):
                if field_name not in comp:
                    raise ModelConfigError(f"{where}.{field_name}: missing required field")
            weight = _number(comp["weight"], f"{where}.weight")
            if weight < 0:
                raise ModelConfigError(f"{where}.weight: must be nonnegative, got {weight!r}")
            mean = _vector(comp["mean"], f"{where}.mean")
            var = _vector(comp["vars"], f"{where}.vars")
            if np.any(var <= 0):
                raise ModelConfigError(f"{where}.vars: variances must be positive")
            if var.size != mean.size:
                raise ModelConfigError(f"{where}.vars: length {var.size} does not match mean ({mean.size})")
            weights.append(weight)
            means.append(mean)
            variances.append(var)
        dims = {m.size for m in means}
        if len(dims) != 1:
            raise ModelConfigError(f"{kind}.components: inconsistent mean dimensions {sorted(dims)}")
        total = float(np.sum(weights))
        if abs(total - 1.0) > 1e-9:
            raise ModelConfigError(f"{kind}.components: weights sum to {total!r}, expected 1 within 1e-9")
        try:
            dx = int(config.get("dx", 1))
        except (TypeError, ValueError):
            raise ModelConfigError(f"dx: expected an integer, got {config.get('dx')!r}") from None
        model = CondGaussMixtureModel(weights=weights, means=means, variances=variances, dx=dx)
    else:
        raise ModelConfigError(f"kind: unknown model kind {kind!r}")

    return _check_dims(config, model)


def load_model_file(path) -> ConditionalModel:
    """Parse a JSON model configuration file and build the model."""
    path = Path(path)
    try:
        with path.open() as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelConfigError(f"{path}: invalid JSON: {exc}") from None
    return load_model(config)
