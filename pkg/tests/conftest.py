"""Pytest configuration for nehari-bif tests."""

import pytest

from nehari_bif.analysis import maximize_lambda
from nehari_bif.core import Grid, KirchhoffModel, NEPModel, OptimizerOptions

# Small grids keep the numerical suites fast; properties under test do not depend on n
SMALL_N = 40


@pytest.fixture(scope="session")
def grid():
    return Grid(dim=1, n=SMALL_N)


@pytest.fixture(scope="session")
def kirchhoff(grid):
    return KirchhoffModel(a=1.0, q=3.0, grid=grid)


@pytest.fixture(scope="session")
def nep(grid):
    return NEPModel(gamma=4.0, q=3.0, mu=1.0, grid=grid)


@pytest.fixture(scope="session")
def opts():
    return OptimizerOptions(restarts=2, max_iter=4000)


@pytest.fixture(scope="session")
def kirchhoff_extremal(kirchhoff, opts):
    return maximize_lambda(kirchhoff, opts)


@pytest.fixture(scope="session")
def nep_extremal(nep, opts):
    return maximize_lambda(nep, opts)
