import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_values(rng, k, zero_prob=0.0, sigma=1.5):
    """Log-normal value vector with an optional sprinkling of zeros."""
    v = np.exp(rng.normal(0.0, sigma, size=k))
    if zero_prob:
        v[rng.random(k) < zero_prob] = 0.0
    return v
