from __future__ import annotations

import numpy as np
import pytest

from condgof import (
    GaussKernel,
    JointSample,
    LinearGaussianModel,
    OptConfig,
    TestLocations,
    criterion_gradient,
    derive_seed,
    make_problem,
    median_heuristic,
    optimize_fscd,
    power_criterion,
    sample_random_locations,
    split,
)
from conftest import random_linear_model, random_sample


class TestSplit:
    def test_sizes_floor_fraction(self, rng):
        sample = random_sample(rng, 10, 2, 1)
        train, test = split(sample, 0.3, seed=1)
        assert train.n == 3 and test.n == 7

    def test_union_is_original_multiset(self, rng):
        sample = random_sample(rng, 17, 2, 1)
        train, test = split(sample, 0.4, seed=5)
        rebuilt = np.vstack([np.hstack([train.xs, train.ys]), np.hstack([test.xs, test.ys])])
        original = np.hstack([sample.xs, sample.ys])
        order = np.lexsort(rebuilt.T)
        base_order = np.lexsort(original.T)
        np.testing.assert_array_equal(rebuilt[order], original[base_order])

    def test_fixed_seed_identical(self, rng):
        sample = random_sample(rng, 12, 1, 1)
        a_train, a_test = split(sample, 0.5, seed=9)
        b_train, b_test = split(sample, 0.5, seed=9)
        np.testing.assert_array_equal(a_train.xs, b_train.xs)
        np.testing.assert_array_equal(a_test.ys, b_test.ys)

    def test_too_small(self, rng):
        sample = random_sample(rng, 4, 1, 1)
        with pytest.raises(ValueError, match="too small"):
            split(sample, 0.1, seed=0)

    def test_bad_fraction(self, rng):
        sample = random_sample(rng, 10, 1, 1)
        for bad in (0.0, 1.0, -0.2):
            with pytest.raises(ValueError):
                split(sample, bad, seed=0)


class TestCriterionGradient:
    def test_analytic_matches_finite_differences(self, rng):
        for trial in range(8):
            model = random_linear_model(rng, 2)
            train = random_sample(rng, 20, 2, 1)
            locations = TestLocations(rng.standard_normal((2, 2)))
            k = GaussKernel(float(rng.uniform(0.6, 2.0)))
            l = GaussKernel(float(rng.uniform(0.6, 2.0)))
            analytic = criterion_gradient(model, k, l, locations, train, regularizer=1e-4)
            fd = criterion_gradient(
                model, k, l, locations, train, regularizer=1e-4, mode="finite_difference", fd_step=1e-5
            )
            np.testing.assert_allclose(analytic.locations, fd.locations, rtol=1e-4, atol=1e-8)
            assert analytic.log_bandwidth_x == pytest.approx(fd.log_bandwidth_x, rel=1e-4, abs=1e-8)
            assert analytic.log_bandwidth_y == pytest.approx(fd.log_bandwidth_y, rel=1e-4, abs=1e-8)
            assert analytic.value == pytest.approx(fd.value, rel=1e-12)

    def test_value_equals_power_criterion(self, rng):
        model = random_linear_model(rng, 2)
        train = random_sample(rng, 15, 2, 1)
        locations = TestLocations(rng.standard_normal((3, 2)))
        k = GaussKernel(1.0)
        l = GaussKernel(1.4)
        grad = criterion_gradient(model, k, l, locations, train, regularizer=1e-5)
        assert grad.value == power_criterion(model, k, l, locations, train, 1e-5)

    def test_symmetric_configuration_has_zero_location_gradient(self):
        # Data symmetric under (x, y) -> (-x, -y) and the location at the
        # origin: the criterion is even in v, so its gradient vanishes there.
        rng = np.random.default_rng(3)
        half_x = rng.standard_normal((10, 1))
        half_y = half_x + 0.3 * rng.standard_normal((10, 1))
        xs = np.vstack([half_x, -half_x])
        ys = np.vstack([half_y, -half_y])
        train = JointSample(xs, ys)
        model = LinearGaussianModel([1.0])
        grad = criterion_gradient(
            model, GaussKernel(1.0), GaussKernel(1.0), TestLocations([[0.0]]), train, regularizer=1e-4
        )
        assert abs(grad.locations[0, 0]) <= 1e-8

    def test_bandwidth_gradients_are_finite_scalars(self, rng):
        model = random_linear_model(rng, 3)
        train = random_sample(rng, 12, 3, 1)
        grad = criterion_gradient(
            model, GaussKernel(1.2), GaussKernel(0.9), TestLocations(rng.standard_normal((2, 3))), train
        )
        assert np.isfinite(grad.log_bandwidth_x)
        assert np.isfinite(grad.log_bandwidth_y)
        assert grad.locations.shape == (2, 3)

    def test_needs_four_rows(self, rng):
        model = random_linear_model(rng, 1)
        train = random_sample(rng, 3, 1, 1)
        with pytest.raises(ValueError, match="4"):
            criterion_gradient(model, GaussKernel(1.0), GaussKernel(1.0), TestLocations([[0.0]]), train)


class TestOptimizeFscd:
    def test_zero_steps_returns_initialization(self):
        spec, sample = make_problem("hgm", 120, seed=4)
        config = OptConfig(steps=0, seed=11)
        result = optimize_fscd(sample, spec.model, 2, config)
        train, test = split(sample, 0.3, derive_seed(11, 0))
        np.testing.assert_array_equal(result.train.xs, train.xs)
        np.testing.assert_array_equal(result.test.xs, test.xs)
        expected = sample_random_locations(train, 2, derive_seed(11, 1))
        np.testing.assert_array_equal(result.locations.vs, expected.vs)
        assert result.sigma_x == median_heuristic(train.xs)
        assert result.sigma_y == median_heuristic(train.ys)
        assert result.trace.shape == (1,)

    def test_improves_criterion_on_heteroscedastic_problem(self):
        spec = None
        improved = 0
        for seed in range(5):
            spec, sample = make_problem("hgm", 200, seed=seed)
            result = optimize_fscd(sample, spec.model, 1, OptConfig(steps=60, seed=seed))
            improved += result.trace[-1] >= result.trace[0]
        assert improved >= 4

    def test_trace_length_and_determinism(self):
        spec, sample = make_problem("hgm", 150, seed=2)
        a = optimize_fscd(sample, spec.model, 2, OptConfig(steps=25, seed=3))
        b = optimize_fscd(sample, spec.model, 2, OptConfig(steps=25, seed=3))
        assert a.trace.shape == (26,)
        np.testing.assert_array_equal(a.trace, b.trace)
        np.testing.assert_array_equal(a.locations.vs, b.locations.vs)

    def test_bandwidths_stay_positive(self):
        spec, sample = make_problem("hgm", 120, seed=6)
        result = optimize_fscd(sample, spec.model, 1, OptConfig(steps=40, learning_rate=0.5, seed=1))
        assert result.sigma_x > 0
        assert result.sigma_y > 0

    def test_finite_difference_mode_agrees(self):
        spec, sample = make_problem("hgm", 80, seed=9)
        analytic = optimize_fscd(
            sample, spec.model, 1, OptConfig(steps=50, seed=2, gradient_mode="analytic")
        )
        fd = optimize_fscd(
            sample, spec.model, 1, OptConfig(steps=50, seed=2, gradient_mode="finite_difference")
        )
        assert fd.trace[-1] == pytest.approx(analytic.trace[-1], rel=1e-3)

    def test_train_fraction_respected(self):
        spec, sample = make_problem("hgm", 100, seed=5)
        result = optimize_fscd(sample, spec.model, 1, OptConfig(steps=5, train_fraction=0.4, seed=1))
        assert result.train.n == 40
        assert result.test.n == 60
