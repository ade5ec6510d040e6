import numpy as np
import pytest

from brownresnick import Grid, RandomStream, VariogramModel


@pytest.fixture(scope="session")
def brownian_model():
    """Standard Brownian case: gamma(h) = |h| / 2."""
    return VariogramModel(alpha=1.0, scale=0.5)


@pytest.fixture(scope="session")
def grid_b2():
    return Grid(half_width=2.0, step=0.1)


@pytest.fixture(scope="session")
def grid_b1():
    return Grid(half_width=1.0, step=0.1)


def gumbel_draws(gen: np.random.Generator, n: int) -> np.ndarray:
    """Exact standard Gumbel variates: -log of standard exponentials."""
    return -np.log(gen.standard_exponential(n))


@pytest.fixture()
def stream():
    return RandomStream(20260809)
