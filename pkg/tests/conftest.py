import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from survsplit.data import NodeView, SurvivalDataset  # noqa: E402

D1_TIMES = [1.0, 2.0, 2.0, 3.0, 4.0]
D1_EVENTS = [1, 1, 0, 1, 1]
D1_X = [0.1, 0.2, 0.3, 0.4, 0.5]


@pytest.fixture
def d1():
    return SurvivalDataset(np.array(D1_X)[:, None], D1_TIMES, D1_EVENTS)


@pytest.fixture
def d1_node(d1):
    return NodeView.full(d1)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
