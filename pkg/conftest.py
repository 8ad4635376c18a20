"""Euler-Poisson ion lab - shared test fixtures"""

import os

# Check heavy assertions throughout the tests
os.environ.setdefault("EPION_HEAVY_ASSERTS", "1")

# The environment must be set first, pylint: disable=wrong-import-position
import numpy as np  # noqa: E402
import pytest  # noqa: E402
from epion.field import Grid, SpectralField  # noqa: E402


@pytest.fixture
def grid():
    """A small periodic grid"""
    return Grid(128, 32.0)


@pytest.fixture
def gaussian(grid):
    """A real unit-width Gaussian centered on the grid"""
    # It's a fixture, pylint: disable=redefined-outer-name
    return SpectralField.from_function(
        grid, lambda x1, x2: np.exp(-(x1 ** 2 + x2 ** 2) / 2)
    )


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    """A temporary directory set as the output directory"""
    monkeypatch.setenv("EPION_OUTPUT_DIR", str(tmp_path))
    return tmp_path
