import numpy as np
import pytest

from cyclic_etl.agents import EtlParams


@pytest.fixture(scope="session")
def params():
    return EtlParams()


@pytest.fixture(scope="session")
def hypothetical(params):
    return params.hypothetical()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, repeated after the run so it survives output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
