import math
import sys

import pytest

from twophoton import BBO, LIIO3, CutConfiguration, solve_beamlike_angle, solve_collinear_angle


@pytest.fixture(scope="session")
def theta_bbo_I():
    return solve_collinear_angle(BBO, 0.351, "I")


@pytest.fixture(scope="session")
def theta_bbo_II():
    return solve_collinear_angle(BBO, 0.351, "II")


@pytest.fixture(scope="session")
def theta_beamlike():
    return solve_beamlike_angle(BBO, 0.351)


@pytest.fixture(scope="session")
def cut_bbo_I(theta_bbo_I):
    return CutConfiguration(BBO, 0.351, theta_bbo_I, 1000.0)


@pytest.fixture(scope="session")
def cut_bbo_II(theta_bbo_II):
    return CutConfiguration(BBO, 0.351, theta_bbo_II, 1000.0, family="II")


@pytest.fixture(scope="session")
def cut_liio3_I():
    return CutConfiguration(LIIO3, 0.351, solve_collinear_angle(LIIO3, 0.351, "I"), 1000.0)


@pytest.fixture(scope="session")
def cut_open_I(theta_bbo_I):
    """Type I BBO cut tilted 0.5 deg past collinear: a ring of radius ~0.06 rad."""
    return CutConfiguration(BBO, 0.351, theta_bbo_I + math.radians(0.5), 1000.0)


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None) or getattr(
        sys.modules.get("tests.test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
