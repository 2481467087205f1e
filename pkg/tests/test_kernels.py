from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condgof import DegenerateDataError, GaussKernel, median_heuristic


class TestEval:
    def test_identity_point(self):
        assert GaussKernel(1.0).eval([0.0, 0.0], [0.0, 0.0]) == 1.0

    def test_unit_distance(self):
        assert GaussKernel(1.0).eval([1.0], [0.0]) == pytest.approx(np.exp(-0.5))

    def test_bandwidth_scales_distance(self):
        assert GaussKernel(2.0).eval([2.0], [0.0]) == pytest.approx(np.exp(-0.5))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            GaussKernel(1.0).eval([1.0, 2.0], [1.0])

    def test_bad_bandwidth(self):
        for bad in (0.0, -1.0, np.nan, np.inf):
            with pytest.raises(ValueError):
                GaussKernel(bad)

    @given(
        st.lists(st.floats(-5, 5), min_size=1, max_size=4),
        st.floats(1.0, 5.0),
        st.integers(0, 2**31 - 1),
    )
    @settings(max_examples=50, deadline=None)
    def test_symmetry_and_bounds(self, a, bandwidth, seed):
        b = np.random.default_rng(seed).uniform(-5, 5, size=len(a))
        kern = GaussKernel(bandwidth)
        value = kern.eval(a, b)
        assert value == kern.eval(b, a)
        assert 0.0 < value <= 1.0

    def test_eval_matrix_matches_scalar_exactly(self, rng):
        A = rng.standard_normal((7, 3))
        B = rng.standard_normal((5, 3))
        kern = GaussKernel(0.9)
        K = kern.eval_matrix(A, B)
        for i in range(7):
            for j in range(5):
                assert K[i, j] == kern.eval(A[i], B[j])


class TestGradSecond:
    def test_coincident_points(self):
        np.testing.assert_array_equal(GaussKernel(1.0).grad_second([0.0], [0.0]), [0.0])

    def test_unit_gap(self):
        np.testing.assert_allclose(GaussKernel(1.0).grad_second([1.0], [0.0]), [np.exp(-0.5)])

    def test_antisymmetric_in_swap(self):
        np.testing.assert_allclose(GaussKernel(1.0).grad_second([0.0], [1.0]), [-np.exp(-0.5)])
        rng = np.random.default_rng(0)
        kern = GaussKernel(1.3)
        for _ in range(20):
            y, y2 = rng.standard_normal((2, 3))
            np.testing.assert_array_equal(kern.grad_second(y, y2), -kern.grad_second(y2, y))

    def test_matches_finite_differences(self, rng):
        kern = GaussKernel(1.1)
        step = 1e-5
        for _ in range(30):
            y = rng.standard_normal(3)
            y2 = y + rng.uniform(-1, 1, size=3)  # keep within a few bandwidths
            grad = kern.grad_second(y, y2)
            for c in range(3):
                e = np.zeros(3)
                e[c] = step
                fd = (kern.eval(y, y2 + e) - kern.eval(y, y2 - e)) / (2 * step)
                assert grad[c] == pytest.approx(fd, rel=1e-6, abs=1e-9)


class TestCrossTrace:
    @pytest.mark.parametrize("dim", [1, 3])
    def test_coincident_points(self, dim):
        kern = GaussKernel(1.0)
        point = np.zeros(dim)
        assert kern.cross_trace(point, point) == pytest.approx(dim)

    def test_vanishes_at_unit_gap(self):
        assert GaussKernel(1.0).cross_trace([1.0], [0.0]) == pytest.approx(0.0, abs=1e-15)

    def test_matches_mixed_finite_differences(self, rng):
        kern = GaussKernel(1.2)
        step = 1e-5
        for _ in range(20):
            y = rng.standard_normal(2)
            y2 = y + rng.uniform(-1.5, 1.5, size=2)
            fd = 0.0
            for c in range(2):
                e = np.zeros(2)
                e[c] = step
                fd += (
                    kern.eval(y + e, y2 + e)
                    - kern.eval(y + e, y2 - e)
                    - kern.eval(y - e, y2 + e)
                    + kern.eval(y - e, y2 - e)
                ) / (4 * step * step)
            assert kern.cross_trace(y, y2) == pytest.approx(fd, rel=1e-6, abs=1e-6)


class TestMedianHeuristic:
    def test_three_points(self):
        assert median_heuristic([[0.0], [1.0], [3.0]]) == 2.0

    def test_single_pair(self):
        assert median_heuristic([[0.0, 0.0], [3.0, 4.0]]) == 5.0

    def test_duplicates_allowed(self):
        assert median_heuristic([[0.0], [0.0], [1.0]]) == 1.0

    def test_even_count_takes_lower_middle(self):
        # distances {1, 2, 3, 1, 2, 1} -> sorted [1, 1, 1, 2, 2, 3], lower middle = 1
        assert median_heuristic([[0.0], [1.0], [2.0], [3.0]]) == 1.0

    def test_too_few_points(self):
        with pytest.raises(DegenerateDataError):
            median_heuristic([[1.0]])

    def test_all_identical(self):
        with pytest.raises(DegenerateDataError):
            median_heuristic([[2.0], [2.0], [2.0]])

    def test_permutation_invariant(self, rng):
        pts = rng.standard_normal((12, 2))
        base = median_heuristic(pts)
        for _ in range(5):
            assert median_heuristic(pts[rng.permutation(12)]) == base

    @given(st.floats(0.01, 100.0), st.integers(0, 2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_scales_linearly(self, c, seed):
        pts = np.random.default_rng(seed).standard_normal((8, 2))
        np.testing.assert_allclose(median_heuristic(c * pts), c * median_heuristic(pts), rtol=1e-12)

    def test_subsampling_is_seeded(self, rng):
        pts = rng.standard_normal((120, 2))
        a = median_heuristic(pts, max_points=40, seed=3)
        b = median_heuristic(pts, max_points=40, seed=3)
        assert a == b
        full = median_heuristic(pts)
        assert a == pytest.approx(full, rel=0.3)
