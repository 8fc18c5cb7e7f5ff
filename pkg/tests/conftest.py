import math
from pathlib import Path

import numpy as np
import pytest

from circle_uac.circle_maps import CircleEndomorphism, build_lift
from circle_uac.conjugacy import build_conjugacy

DATA = Path(__file__).parent / "data"
BLASCHKE_A = 0.1


def blaschke_closed_form(x, a=BLASCHKE_A):
    """Lift of z(z - a)/(1 - a z): 2x + arg(1 - a e^{-2 pi i x}) / pi."""
    t = 2 * math.pi * x
    return 2 * x + math.atan2(a * math.sin(t), 1 - a * math.cos(t)) / math.pi


@pytest.fixture(scope="session")
def blaschke_endo():
    return CircleEndomorphism.blaschke([0.0, BLASCHKE_A])


@pytest.fixture(scope="session")
def blaschke_lift(blaschke_endo):
    return build_lift(blaschke_endo, 2**12, 1e-12)


@pytest.fixture(scope="session")
def power_lift():
    return build_lift(CircleEndomorphism.power(2), 2**12)


@pytest.fixture(scope="session")
def blaschke_H10(blaschke_lift):
    return build_conjugacy(blaschke_lift, 10, 1e-12)


@pytest.fixture(scope="session")
def blaschke_H12(blaschke_lift):
    return build_conjugacy(blaschke_lift, 12, 1e-12)


@pytest.fixture(scope="session")
def power_H12(power_lift):
    return build_conjugacy(power_lift, 12, 1e-12)


@pytest.fixture
def dyadic_heights():
    return 2.0 ** -np.arange(1, 9)


# one summary line per acceptance criterion
_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    ok = rep.passed if rep.when == "call" else not rep.failed
    prev = _CRITERIA.get(number, (title, True))
    _CRITERIA[number] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
