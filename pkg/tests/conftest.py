import numpy as np
import pytest

from picard_bsde.basis import DomainBox, SparseBasis
from picard_bsde.models import black_scholes, dupire


@pytest.fixture
def bs5():
    return black_scholes(5, 100.0, 0.05, 0.0, 0.2, 0.1, 3.0)


@pytest.fixture
def dup3():
    return dupire(3, 100.0, 0.05, 0.0, 0.3, 1.0)


@pytest.fixture
def box2():
    return DomainBox(1.0, np.array([4.0, 4.2]), np.array([5.0, 4.9]))


@pytest.fixture
def basis2(box2):
    return SparseBasis(box2, 3, 1.0)


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
