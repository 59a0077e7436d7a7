import math
import time

import pytest

from flatdenjoy import construction as C
from flatdenjoy import rotation as R

EPS = math.sqrt(2.0) / 8.0
L0 = 0.75

# acceptance lines collected by tests/test_acceptance.py, printed at the end
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def stage0():
    return C.init_stage0(EPS, R.GOLDEN, L0)


@pytest.fixture(scope="session")
def k4_run():
    """The reference K=4 construction, with every stage state and report."""
    states, reports = [], []

    def keep(S, rep):
        states.append(S)
        reports.append(rep)

    t = time.perf_counter()
    M, cert, S = C.run(4, EPS, R.GOLDEN, L0, on_stage=keep)
    return {"map": M, "cert": cert, "final": S, "states": states, "reports": reports,
            "seconds": time.perf_counter() - t}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
