"""Shared generators for random models, graphs, and driven sets.

Generators take an explicit numpy Generator so every test pins its own
seed; nothing here draws from global state.
"""

from __future__ import annotations

import numpy as np
import pytest

from diffnet.subsystem import SubsystemModel, check_controllable, check_observable
from diffnet.topology import DIRECTED, UNDIRECTED, DrivenSet, Edge, NetworkGraph
from diffnet.verdict import Verdict

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance():
    """Report one pass/fail line per acceptance criterion and assert it."""

    def _report(num: int, name: str, ok: bool, detail: str = ""):
        line = f"criterion {num:02d} {'PASS' if ok else 'FAIL'} - {name}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return _report


def random_graph(
    gen: np.random.Generator,
    num_vertices: int,
    edge_prob: float = 0.5,
    allow_directed: bool = True,
) -> NetworkGraph:
    """Random mixed graph honoring the one-weight-per-vertex-pair policy."""
    edges: list[Edge] = []
    for u in range(1, num_vertices + 1):
        for v in range(u + 1, num_vertices + 1):
            if gen.random() >= edge_prob:
                continue
            if not allow_directed or gen.random() < 0.5:
                edges.append(Edge(u, v, UNDIRECTED))
            elif gen.random() < 0.3:
                # antiparallel pair, the one allowed coexistence
                edges.append(Edge(u, v, DIRECTED))
                edges.append(Edge(v, u, DIRECTED))
            elif gen.random() < 0.5:
                edges.append(Edge(u, v, DIRECTED))
            else:
                edges.append(Edge(v, u, DIRECTED))
    return NetworkGraph(num_vertices, tuple(edges))


def random_connected_graph(
    gen: np.random.Generator, num_vertices: int, extra_prob: float = 0.3
) -> NetworkGraph:
    """Random undirected connected graph: a random tree plus extra edges."""
    labels = list(gen.permutation(np.arange(1, num_vertices + 1)))
    edges: list[Edge] = []
    for i in range(1, num_vertices):
        j = int(gen.integers(0, i))
        edges.append(Edge(int(labels[j]), int(labels[i]), UNDIRECTED))
    present = {e.key() for e in edges}
    for u in range(1, num_vertices + 1):
        for v in range(u + 1, num_vertices + 1):
            key = (UNDIRECTED, u, v)
            if key not in present and gen.random() < extra_prob:
                edges.append(Edge(u, v, UNDIRECTED))
                present.add(key)
    return NetworkGraph(num_vertices, tuple(edges))


def random_driven(
    gen: np.random.Generator,
    num_vertices: int,
    allow_empty: bool = False,
    allow_full: bool = True,
) -> DrivenSet:
    low = 0 if allow_empty else 1
    high = num_vertices if allow_full else num_vertices - 1
    high = max(high, low)
    count = int(gen.integers(low, high + 1))
    chosen = gen.choice(np.arange(1, num_vertices + 1), size=count, replace=False)
    return DrivenSet(frozenset(int(v) for v in chosen))


def ensure_incoming_influence(
    gen: np.random.Generator, graph: NetworkGraph, driven: DrivenSet
) -> NetworkGraph:
    """Add directed edges so every undriven vertex has incoming influence.

    A vertex with zero incoming influence has no undirected edge and no
    directed edge pointing at it, so a fresh directed edge toward it never
    conflicts with the pair policy.
    """
    counts = graph.incoming_influence_counts()
    edges = list(graph.edges)
    for v in range(1, graph.num_vertices + 1):
        if v in driven or counts[v - 1] > 0:
            continue
        others = [w for w in range(1, graph.num_vertices + 1) if w != v]
        w = int(gen.choice(others))
        edges.append(Edge(w, v, DIRECTED))
    return NetworkGraph(graph.num_vertices, tuple(edges))


def random_model(
    gen: np.random.Generator,
    order: int,
    num_outputs: int,
    num_inputs: int = 1,
    require_ctrb: bool = False,
    require_obsv: bool = False,
) -> SubsystemModel:
    """Dense Gaussian model; optional redraw until controllable/observable."""
    for _ in range(50):
        model = SubsystemModel(
            gen.normal(size=(order, order)),
            gen.normal(size=(order, num_inputs)),
            gen.normal(size=(num_outputs, order)),
        )
        if require_ctrb and not check_controllable(model)[0]:
            continue
        if require_obsv and not check_observable(model)[0]:
            continue
        return model
    raise AssertionError("could not draw a model with the requested properties")


def uncontrollable_model(
    gen: np.random.Generator, order: int, num_outputs: int
) -> SubsystemModel:
    """(A, b) provably uncontrollable: a decoupled mode the input misses."""
    assert order >= 2
    a11 = gen.normal(size=(order - 1, order - 1))
    a = np.zeros((order, order))
    a[: order - 1, : order - 1] = a11
    a[order - 1, order - 1] = float(gen.normal())
    b = np.zeros((order, 1))
    b[: order - 1, 0] = gen.normal(size=order - 1)
    c = gen.normal(size=(num_outputs, order))
    return SubsystemModel(a, b, c)


def unobservable_model(
    gen: np.random.Generator, order: int, num_outputs: int
) -> SubsystemModel:
    """(A, C) provably unobservable: a decoupled mode no output sees."""
    assert order >= 2
    a11 = gen.normal(size=(order - 1, order - 1))
    a = np.zeros((order, order))
    a[: order - 1, : order - 1] = a11
    a[order - 1, order - 1] = float(gen.normal())
    b = gen.normal(size=(order, 1))
    c = np.zeros((num_outputs, order))
    c[:, : order - 1] = gen.normal(size=(num_outputs, order - 1))
    return SubsystemModel(a, b, c)


def verdict_bool(verdict: Verdict) -> bool:
    assert verdict in (Verdict.CONTROLLABLE, Verdict.NOT_CONTROLLABLE)
    return verdict is Verdict.CONTROLLABLE
