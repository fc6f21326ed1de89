import pytest

from hairlab import find_fixed_points
from hairlab.schroeder import build_schroeder


@pytest.fixture(scope="session")
def p25():
    return find_fixed_points(0.25)


@pytest.fixture(scope="session")
def S25(p25):
    return build_schroeder(p25)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
