"""Shared fixtures and the acceptance summary printed at the end of a run."""
import math

import pytest

from detmodes.lattice import TorusGeometry
from detmodes.solver import SpectralGrid

ACCEPTANCE = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (passed, detail)
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if passed else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def square():
    return TorusGeometry(2 * math.pi, 1.0)


@pytest.fixture(scope="session")
def grid64(square):
    return SpectralGrid(square, 64)
