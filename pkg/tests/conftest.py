import os
import sys
import warnings

import pytest
from hypothesis import HealthCheck, settings

from heatcell.errors import ConeViolationWarning
from heatcell.grid import ModelParams, MomentumGrid

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("heatcell", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("heatcell")

# acceptance criterion number -> (passed, one-line summary)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(number: int, passed: bool, summary: str) -> None:
    ACCEPTANCE[number] = (bool(passed), summary)
    print(f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {summary}")


@pytest.fixture(scope="session")
def params():
    return ModelParams()


@pytest.fixture(scope="session")
def grid():
    return MomentumGrid()


@pytest.fixture(scope="session")
def coarse_grid():
    return MomentumGrid(n=120)


@pytest.fixture(autouse=True)
def _quiet_cone_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConeViolationWarning)
        yield


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {k:2d}: {line}")
