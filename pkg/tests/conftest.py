import math

import numpy as np
import pytest

from plcuts.partition import WeightedGraph


def set_partitions(n):
    """All set partitions of range(n) as restricted-growth label lists."""
    if n == 0:
        yield []
        return

    def rec(prefix, top):
        if len(prefix) == n:
            yield list(prefix)
            return
        for c in range(top + 2):
            prefix.append(c)
            yield from rec(prefix, max(top, c))
            prefix.pop()

    yield from rec([0], 0)


def eppf_direct(sizes, alpha, theta):
    """Pitman-Yor partition probability as a plain product (no logs)."""
    n, k = sum(sizes), len(sizes)
    num = math.prod(alpha + j * theta for j in range(1, k))
    den = math.prod(alpha + 1 + j for j in range(n - 1))
    blocks = math.prod(math.prod(j - theta for j in range(1, s)) for s in sizes)
    return num * blocks / den


def sizes_of(labels):
    return list(np.bincount(np.asarray(labels)))


def random_connected_graph(rng, n, p=0.5, weighted=True):
    while True:
        A = np.triu((rng.random((n, n)) < p).astype(float), 1)
        if weighted:
            A *= rng.uniform(0.5, 2.0, size=A.shape)
        A = A + A.T
        # connectivity via BFS
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in np.flatnonzero(A[u]):
                if v not in seen:
                    seen.add(int(v))
                    stack.append(int(v))
        if len(seen) == n:
            return WeightedGraph(A)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def acceptance_record(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
