import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from asp2vec.graph import from_edges  # noqa: E402


@pytest.fixture
def triangle():
    return from_edges(np.array([[0, 1], [1, 2], [2, 0]]), 3, directed=False)


@pytest.fixture
def path3():
    return from_edges(np.array([[0, 1], [1, 2]]), 3, directed=False)


@pytest.fixture
def star5():
    return from_edges(np.array([[0, k] for k in range(1, 6)]), 6, directed=False)


def random_graph(rng, n, p, directed=False):
    iu, ju = np.nonzero(rng.random((n, n)) < p)
    keep = iu != ju if directed else iu < ju
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    return from_edges(edges, n, directed=directed)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
