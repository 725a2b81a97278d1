import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coreplan.graph import from_edges, random_graph  # noqa: E402

# PASS/FAIL lines from the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def cycle2():
    return from_edges([0, 1], [1, 0])


@pytest.fixture
def star():
    return from_edges([0, 0, 0], [1, 2, 3])


def small_graphs(count, seed=0, max_n=50):
    """Random directed graphs with n <= max_n, self-loops, parallel arcs and dead ends."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(2, max_n + 1))
        out.append(random_graph(n, float(rng.uniform(0.5, 4.0)), seed=seed * 1000 + i,
                                dead_end_fraction=float(rng.uniform(0.0, 0.3))))
    return out
