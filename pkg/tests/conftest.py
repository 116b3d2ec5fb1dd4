import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gmconsensus.graph import fig1a_balanced_graph, fig1b_graph

# numba compiles on first use; hypothesis deadlines would trip on that
settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

X0 = np.array([6.5, 0.2, 3.2, 1.0, 4.4])


@pytest.fixture
def x0():
    return X0.copy()


@pytest.fixture(scope="session")
def fig1b():
    return fig1b_graph()


@pytest.fixture(scope="session")
def fig1a():
    return fig1a_balanced_graph()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {detail}")
