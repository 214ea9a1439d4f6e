"""Random instance generators shared by the test modules."""

from __future__ import annotations

import itertools

import numpy as np

from relay_energy.cgras import Cgras, Vertex, maximal_edges
from relay_energy.model import MessageAllocation, NetworkConfig


def cgauss(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_config(rng, n_rn, n_rx, rate_range=(0.2, 1.0)) -> NetworkConfig:
    d = cgauss(rng, n_rn)
    h = cgauss(rng, (n_rx, n_rn))
    r = rng.uniform(*rate_range, n_rx)
    return NetworkConfig(d, h, r)


def full_allocation(n_rn, n_rx) -> MessageAllocation:
    return MessageAllocation.from_lists([list(range(n_rx))] * n_rn)


def nonempty_subsets(n):
    return [frozenset(s) for k in range(1, n + 1) for s in itertools.combinations(range(n), k)]


def transitive_closure(edges):
    closure = set(edges)
    while True:
        extra = {(a, c) for a, b in closure for b2, c in closure if b == b2 and a != c} - closure
        if not extra:
            return frozenset(closure)
        closure |= extra


def random_dag_scheme(rng, n_rn, n_rx, max_vertices, edge_prob=0.5) -> Cgras:
    """A structurally valid scheme on random distinct vertices, full cognition.

    Edges are a random subset of the admissible order, transitively closed.
    Gamma is zero, so only the structure is meaningful.
    """
    pool = [Vertex(e, d) for e in nonempty_subsets(n_rn) for d in nonempty_subsets(n_rx)]
    k = int(rng.integers(1, min(max_vertices, len(pool)) + 1))
    pick = rng.choice(len(pool), size=k, replace=False)
    verts = tuple(pool[i] for i in sorted(pick))
    edges = [e for e in sorted(maximal_edges(verts)) if rng.random() < edge_prob]
    return Cgras(full_allocation(n_rn, n_rx), verts, transitive_closure(edges),
                 np.zeros((n_rx, len(verts))))


def random_mixing(rng, cgras: Cgras, n_rn) -> np.ndarray:
    a = cgauss(rng, (n_rn, cgras.n_vertices)) * rng.uniform(0.2, 2.0, (1, cgras.n_vertices))
    for v, vert in enumerate(cgras.vertices):
        for j in range(n_rn):
            if j not in vert.encoders:
                a[j, v] = 0
    return a


# (criterion, passed, detail) lines collected by the acceptance suite
ACCEPTANCE: list[tuple[int, bool, str]] = []


def report(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE.append((criterion, passed, detail))
    print(f"{'PASS' if passed else 'FAIL'} criterion {criterion}: {detail}")
