import math

import pytest

from cavityspec.params import SystemRates, preset

TWO_PI = 2.0 * math.pi


@pytest.fixture
def apparatus():
    return preset("paper-apparatus", 1)


@pytest.fixture
def fig1():
    return preset("paper-fig1", 1)


@pytest.fixture
def matched():
    """kappa = gamma / 2."""
    return SystemRates.from_mhz(2.0, 3.0, 6.0, 1)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
