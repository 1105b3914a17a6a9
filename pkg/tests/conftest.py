"""Shared fixtures and the --runslow switch for Monte Carlo checks."""

from __future__ import annotations

import numpy as np
import pytest

from betakde.density import Sample


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow Monte Carlo tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def normal_sample(rng) -> Sample:
    return Sample.from_values(rng.standard_normal(50))


@pytest.fixture
def three_points() -> Sample:
    return Sample.from_values([-1.0, 0.0, 1.0])
