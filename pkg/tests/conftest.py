"""Shared helpers for the test suite.

Random inputs are always drawn from explicitly seeded generators so
every test is reproducible; helpers that build random distributions
keep all masses strictly positive unless a test asks otherwise.
"""

import numpy as np
import pytest

from ratelab import DiscreteDensity


def positive_simplex(rng, size, floor=0.05):
    """Random point of the simplex with every coordinate >= floor/(1+...)."""
    raw = rng.dirichlet(np.ones(size))
    mass = (raw + floor) / (1.0 + floor * size)
    return mass / mass.sum()


def random_density_pair(rng, size=None):
    """Two discrete densities on a shared outcome set, strictly positive."""
    if size is None:
        size = int(rng.integers(2, 6))
    p = DiscreteDensity(positive_simplex(rng, size))
    q = DiscreteDensity(positive_simplex(rng, size))
    return p, q


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
