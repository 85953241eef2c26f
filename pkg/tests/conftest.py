"""Pytest configuration and fixtures."""

import numpy as np
import pytest
from pathlib import Path


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run ensemble-scale ordering suites")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def fixtures_path() -> Path:
    """Provide path to test fixtures directory."""
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
