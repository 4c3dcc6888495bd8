import math
import os

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

from tfmod.grid import make_grid  # noqa: E402


@pytest.fixture(scope="session")
def spec1():
    """The standard 1-D box: N=256 on [-8 pi, 8 pi)."""
    return make_grid(1, 256, 8 * math.pi)


@pytest.fixture(scope="session")
def spec2():
    return make_grid(2, 32, 2 * math.pi)


_ACCEPTANCE_LINES: list[str] = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _ACCEPTANCE_LINES.extend(v for k, v in report.user_properties if k == "acceptance")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
