"""Shared fixtures and hypothesis profiles."""
import os
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import Verbosity, settings

from ahsc import data

settings.register_profile("ci", deadline=timedelta(milliseconds=2000), max_examples=100)
settings.register_profile("dev", deadline=None, max_examples=20)
settings.register_profile("debug", deadline=None, max_examples=10, verbosity=Verbosity.verbose)
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def blobs2():
    return data.synthetic_blobs(50, 2, 2, 6.0, 1.0, seed=3)


@pytest.fixture
def blobs3():
    return data.synthetic_blobs(100, 3, 4, 2.0, 1.0, seed=11)


@pytest.fixture
def iris():
    return data.load_csv(data.bundled("iris.csv"))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
