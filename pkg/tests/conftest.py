import numpy as np
import pytest

import _oracles


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if _oracles.CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _oracles.CRITERIA:
            terminalreporter.write_line(line)
