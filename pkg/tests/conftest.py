import numpy as np
import pytest

from invmed.grid import unit_grid
from invmed.phantoms import normalize_max, sample_gaussian_mixture


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def smooth_q(n, magnitude=0.1, seed=3):
    """Seeded tapered Gaussian mixture with max |q| = magnitude."""
    return normalize_max(sample_gaussian_mixture(unit_grid(n), seed)[1], magnitude)
