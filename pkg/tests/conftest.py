"""Shared fixtures and the acceptance summary printed at the end of a run."""

import numpy as np
import pytest

from dgmaxreg import build_space, make_uniform


@pytest.fixture(scope="session")
def space1d():
    return build_space("unit_interval", 16, 1)


@pytest.fixture(scope="session")
def space1d_p2():
    return build_space("unit_interval", 8, 2)


@pytest.fixture(scope="session")
def space2d():
    return build_space("unit_square", 4, 1)


@pytest.fixture
def part8():
    return make_uniform(1.0, 8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import summary_lines
    except ImportError:
        return
    lines = summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
