import numpy as np
import pytest

from gpmslab import hermitization
from gpmslab.gpm import from_solution
from gpmslab.slab import QnmSet, SlabCavity

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    num, text = marker
    measured = [str(v) for k, v in report.user_properties if k == "measured"]
    prev = _criteria.get(num, (text, True, []))
    _criteria[num] = (text, prev[1] and report.outcome == "passed", prev[2] + measured)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        rep.criterion = (mark.args[0], mark.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        text, ok, measured = _criteria[num]
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {text}"
        if measured:
            line += "  [" + "; ".join(measured) + "]"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cavity():
    return SlabCavity(4.0, 1.0)


@pytest.fixture(scope="session")
def qnms30(cavity):
    return QnmSet(cavity, 30)


@pytest.fixture(scope="session")
def solution30(qnms30):
    return hermitization.solve_hermitization(qnms30, 2.0)


@pytest.fixture(scope="session")
def params30(qnms30, solution30):
    return from_solution(qnms30, solution30)


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)
