import sys

import pytest

from thinfilm.grid import make_log_grid
from thinfilm.mobility import make_params


@pytest.fixture(scope="session")
def grid():
    return make_log_grid(1e-6, 1e6, 1024)


@pytest.fixture(scope="session")
def small_grid():
    return make_log_grid(1e-6, 1e6, 256)


@pytest.fixture(scope="session")
def p2():
    return make_params(2.0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
