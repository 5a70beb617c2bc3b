import numpy as np
import pytest

from livsic.cocycle import Cocycle, WindowGenerator, random_window_table, window_coboundary
from livsic.dynamics import ShiftOfFiniteType, ToralAutomorphism
from livsic.ring import MatrixRing, ScalarRing


@pytest.fixture(scope="session")
def shift2():
    return ShiftOfFiniteType.full_shift(2)


@pytest.fixture(scope="session")
def cat():
    return ToralAutomorphism.cat_map()


@pytest.fixture(scope="session")
def m2():
    return MatrixRing(2)


@pytest.fixture(scope="session")
def scalar():
    return ScalarRing()


@pytest.fixture(scope="session")
def tstar(shift2, m2):
    """Window-1 transfer map: exp of a random matrix per central 3-word."""
    table = random_window_table(shift2, 1, m2, np.random.default_rng(11), scale=0.5)
    return WindowGenerator(shift2, 1, table, m2)


@pytest.fixture(scope="session")
def coboundary(tstar):
    return Cocycle(window_coboundary(tstar))


@pytest.fixture(scope="session")
def two_thirds(shift2, scalar):
    return Cocycle(WindowGenerator(shift2, 0, {(0,): 2.0, (1,): 3.0}, scalar))


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 10):
        if number in results:
            title, ok, detail = results[number]
            terminalreporter.write_line(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
        else:
            terminalreporter.write_line(f"criterion {number} [FAIL] not run to completion")
