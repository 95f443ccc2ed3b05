import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

import amgtrim as at


# one line per acceptance criterion, echoed after the run so the verdicts
# survive pytest's output capture (test_acceptance.py appends to this)
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def aniso64():
    return at.aniso2d_9pt(64, 64, np.pi / 8, 1e-3)


@pytest.fixture(scope="session")
def poisson20():
    return at.poisson3d_7pt(20, 20, 20)


def rhs_for(a, seed=0):
    return at.spmv(a, at.uniform(seed, a.ncols))
