import numpy as np
import pytest

from nvscatter import Grid, PotentialSpec, RealField, sample_potential


@pytest.fixture(scope="session")
def grid():
    return Grid(6.0, 32)


@pytest.fixture(scope="session")
def gauss(grid):
    return sample_potential(PotentialSpec("gaussian", 0.5, 1.0), grid)


@pytest.fixture(scope="session")
def zero(grid):
    return RealField(grid, np.zeros((grid.N, grid.N)))
