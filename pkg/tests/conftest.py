import math
import sys

import pytest

from geophase import HamiltonianSpec, TimeGrid, initial_state, propagate


@pytest.fixture(scope="session")
def static_plus():
    spec = HamiltonianSpec.static_spin(1.0, math.pi / 3)
    grid = TimeGrid(0.0, math.pi, 20000)
    return spec, propagate(spec, initial_state(spec, "w_plus"), grid)


@pytest.fixture(scope="session")
def rotating_plus():
    spec = HamiltonianSpec.rotating_spin(1.0, 1.0, math.pi / 3)
    grid = TimeGrid(0.0, 2 * math.pi, 40000)
    return spec, propagate(spec, initial_state(spec, "w_plus"), grid)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULT_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
