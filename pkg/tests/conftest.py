import numpy as np
import pytest

from mtop.environments import SyntheticBandit


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def hard_instance():
    """K=20, means evenly spaced on [0.4, 0.6], sd 0.1, m=5."""
    return SyntheticBandit.gaussian(np.linspace(0.4, 0.6, 20), 0.1, m=5)


# One line per acceptance criterion, printed at the end of the session.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
