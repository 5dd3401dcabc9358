import numpy as np
import pytest

from abelfun.suites import DEFAULT_TAU
from abelfun.thetafn import PeriodMatrix


@pytest.fixture(scope="session")
def period_matrices():
    return {g: PeriodMatrix.from_pairs(t) for g, t in DEFAULT_TAU.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
