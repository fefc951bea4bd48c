import numpy as np
import pytest

from fraflow.frackernel import UniformGrid
from fraflow.objectives import make_quadratic

# criterion number -> (passed, seconds, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def quad1():
    return make_quadratic(np.eye(1))


@pytest.fixture
def quad2():
    return make_quadratic(np.eye(2))


@pytest.fixture
def short_grid():
    return UniformGrid.from_horizon(1.0, 5.0, 1e-2)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, seconds, detail = ACCEPTANCE[num]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {num:2d} ({seconds:6.2f} s): {detail}")
