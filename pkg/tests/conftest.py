"""Shared test fixtures and small data builders."""

import numpy as np
import pytest

from cmprisk_lab.data import Dataset


@pytest.fixture
def d3():
    """The three-subject worked example: event 1 at t=1, censored at t=2,
    event 2 at t=3."""
    return Dataset(np.array([1.0, 2.0, 3.0]), np.array([1, 0, 2]),
                   np.zeros((3, 0)), K=2)


def random_sample(rng, n, K=2, p=0, tie_heavy=True, censor=0.3):
    """Random small competing-risk sample; integer-ish times force ties."""
    if tie_heavy:
        times = rng.integers(1, max(3, n // 2), size=n).astype(float)
    else:
        times = rng.exponential(2.0, size=n) + 1e-3
    status = rng.integers(1, K + 1, size=n)
    status[rng.random(n) < censor] = 0
    X = rng.standard_normal((n, p)) if p else np.zeros((n, 0))
    return Dataset(times, status, X, K=K)
