import os

import pytest
from hypothesis import HealthCheck, settings

from crtsched.constellation import IRIDIUM, build_constellation, snapshot_sequence
from crtsched.instances import snapshot_from_edges
from crtsched.traffic import TtFlow

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

MS = 1e-3


@pytest.fixture(scope="session")
def iridium():
    return build_constellation(IRIDIUM)


@pytest.fixture(scope="session")
def iridium_snaps(iridium):
    return snapshot_sequence(iridium, 10, 10.0)


@pytest.fixture
def diamond():
    # 0 -> {1, 2} -> 3, every link 1 ms
    return snapshot_from_edges({(0, 1): MS, (0, 2): MS, (1, 3): MS, (2, 3): MS}, symmetric=False)


def flow(fid, src, dst, deadline=0.05, frame=1500, period=0.010):
    return TtFlow(fid, period, frame, src, dst, deadline)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
