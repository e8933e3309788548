import pytest

from layerlab.analysis import build_profiles
from layerlab.model import ModelParams

EPS = 2.0**-6


@pytest.fixture(scope="session")
def params():
    return ModelParams(epsilon=EPS)


@pytest.fixture(scope="session")
def profiles(params):
    """Outer problems and both layers through second order on a 64-cell mesh."""
    return build_profiles(params, 64)


@pytest.fixture(scope="session")
def profiles_vstar0():
    return build_profiles(ModelParams(epsilon=EPS, v_star=0.0), 64)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for num in sorted(lines):
            terminalreporter.write_line(lines[num])
