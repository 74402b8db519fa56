import numpy as np
import pytest

from gpembed import ManifoldSpec, sample

# filled by tests/test_acceptance.py; printed once at the end of the run
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def circle10():
    return sample(ManifoldSpec("circle", 10, seed=3))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
