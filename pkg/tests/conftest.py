import numpy as np
import pytest

from dsmgrad import GridFunction, norm, wiener_problem
from dsmgrad.harness import make_noisy_rhs


@pytest.fixture(scope="session")
def wiener100():
    return wiener_problem(100, "one")


@pytest.fixture(scope="session")
def noisy100(wiener100):
    """Noisy data at delta_rel = 0.01, seed 0."""
    return make_noisy_rhs(wiener100.rhs_exact, 0.01, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_function(grid, rng, scale=1.0):
    return GridFunction(grid, scale * rng.standard_normal(grid.n_points))


def unit_perturbation(grid, rng):
    e = random_function(grid, rng)
    return e * (1.0 / norm(e))
