from __future__ import annotations

import numpy as np
import pytest

from condgof import JointSample, LinearGaussianModel


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def random_sample(rng, n, dx, dy):
    return JointSample(rng.standard_normal((n, dx)), rng.standard_normal((n, dy)))


def random_linear_model(rng, dx):
    coeffs = rng.uniform(-1.5, 1.5, size=dx)
    return LinearGaussianModel(coeffs, intercept=float(rng.uniform(-1, 1)), noise_var=float(rng.uniform(0.5, 2.0)))
