from __future__ import annotations

import numpy as np
import pytest

from germgraph.graph import Condition, Edge, MetricGraph, Vertex


def random_graph(
    rng: np.random.Generator,
    n_vertices: int | None = None,
    extra_edges: int | None = None,
    *,
    lengths: tuple[float, float] = (0.3, 1.5),
    contacts: int = 1,
    loops: bool = True,
    dirichlet: bool = False,
    prefix: str = "",
) -> MetricGraph:
    """Connected multigraph; the first ``contacts`` vertices are Standard contacts."""
    n = n_vertices if n_vertices is not None else int(rng.integers(2, 7))
    extra = extra_edges if extra_edges is not None else int(rng.integers(0, 4))
    ids = [f"{prefix}u{i}" for i in range(n)]
    pairs = [(ids[int(rng.integers(0, i))], ids[i]) for i in range(1, n)]
    while extra > 0:
        a, b = (ids[int(x)] for x in rng.integers(0, n, size=2))
        if a == b and not loops:
            continue
        pairs.append((a, b))
        extra -= 1
    edges = tuple(Edge(f"{prefix}f{j}", a, b, float(rng.uniform(*lengths))) for j, (a, b) in enumerate(pairs))
    conds = [Condition.STANDARD] * n
    if dirichlet:
        for i in range(contacts, n):
            if rng.random() < 0.3:
                conds[i] = Condition.DIRICHLET
    vertices = tuple(Vertex(v, c) for v, c in zip(ids, conds))
    return MetricGraph(vertices, edges, tuple(ids[:contacts]))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
