"""Superposition-coding schemes: sub-message vertices, rate splitting and the DAG.

A vertex ``(encoders, decoders)`` is a codeword sent jointly by the relays in
``encoders`` and decoded by every receiver in ``decoders``.  An edge
``(bottom, top)`` means the top codeword is superimposed on the bottom one;
this is only possible when the bottom vertex is encoded by a superset of the
top's relays and decoded by a superset of the top's receivers.

Vertices are referred to by their index in ``Cgras.vertices`` throughout.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .model import ConfigError, MessageAllocation, NetworkConfig

log = logging.getLogger(__name__)

GAMMA_TOL = 1e-9


class InvalidScheme(ValueError):
    def __init__(self, errors: Sequence[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


def _fmt(s: Iterable[int]) -> str:
    return "{" + ",".join(str(x) for x in sorted(s)) + "}"


@dataclass(frozen=True)
class Vertex:
    encoders: frozenset[int]
    decoders: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "encoders", frozenset(self.encoders))
        object.__setattr__(self, "decoders", frozenset(self.decoders))
        if not self.encoders or not self.decoders:
            raise ValueError("vertex needs nonempty encoder and decoder sets")

    @property
    def key(self):
        return (len(self.encoders), sorted(self.encoders), len(self.decoders), sorted(self.decoders))

    def can_carry(self, bottom: "Vertex") -> bool:
        """True if this vertex may be superimposed on ``bottom``."""
        return self.encoders <= bottom.encoders and self.decoders <= bottom.decoders

    def __str__(self):
        return f"({_fmt(self.encoders)}->{_fmt(self.decoders)})"


@dataclass(frozen=True, eq=False)
class Cgras:
    """A message allocation, its sub-message vertices, superposition edges and
    the ``(n_receivers, n_vertices)`` rate-splitting matrix ``gamma``."""

    allocation: MessageAllocation
    vertices: tuple[Vertex, ...]
    edges: frozenset[tuple[int, int]]
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", frozenset((int(a), int(b)) for a, b in self.edges))
        g = np.array(self.gamma, dtype=float, ndmin=2)
        if g.shape[1] != len(self.vertices):
            raise ValueError(f"gamma has {g.shape[1]} columns for {len(self.vertices)} vertices")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def children(self, v: int) -> set[int]:
        return {b for a, b in self.edges if a == v}

    def parents(self, v: int) -> set[int]:
        return {a for a, b in self.edges if b == v}

    def decoded_by(self, z: int) -> list[int]:
        """Indices of the vertices decoded at receiver ``z``."""
        return [i for i, v in enumerate(self.vertices) if z in v.decoders]

    def subrates(self, rates: Sequence[float]) -> np.ndarray:
        return split_rates(self.gamma, rates)

    def describe(self) -> str:
        verts = " ".join(f"v{i}{v}" for i, v in enumerate(self.vertices))
        edges = " ".join(f"v{a}->v{b}" for a, b in sorted(self.edges))
        return f"{verts} | {edges or 'no edges'}"


@dataclass(frozen=True)
class ClosedSet:
    receiver: int
    members: frozenset[int]

    def label(self) -> str:
        return "{" + ",".join(f"v{i}" for i in sorted(self.members)) + "}"


@dataclass
class ValidationResult:
    errors: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __bool__(self):
        return self.ok


# -- graph helpers ------------------------------------------------------------

def find_cycle(n: int, edges: Iterable[tuple[int, int]]) -> list[int] | None:
    """Return one directed cycle as a vertex list, or None for a DAG."""
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in edges:
        adj[a].append(b)
    state = [0] * n  # 0 new, 1 on stack, 2 done
    stack_path: list[int] = []

    def visit(u):
        state[u] = 1
        stack_path.append(u)
        for w in sorted(adj[u]):
            if state[w] == 1:
                return stack_path[stack_path.index(w):] + [w]
            if state[w] == 0:
                found = visit(w)
                if found:
                    return found
        stack_path.pop()
        state[u] = 2
        return None

    for u in range(n):
        if state[u] == 0:
            found = visit(u)
            if found:
                return found
    return None


def transitive_holes(edges: Iterable[tuple[int, int]]) -> list[tuple[int, int]]:
    """Pairs implied by two-step paths but missing from ``edges``."""
    edges = set(edges)
    out = {(a, c) for a, b in edges for b2, c in edges if b == b2 and a != c and (a, c) not in edges}
    return sorted(out)


def maximal_edges(vertices: Sequence[Vertex]) -> frozenset[tuple[int, int]]:
    """Every admissible superposition edge among ``vertices``.

    The admissibility relation is a strict partial order on distinct vertices,
    so the result is acyclic and transitively closed.
    """
    return frozenset((a, b) for a, u in enumerate(vertices) for b, v in enumerate(vertices)
                     if a != b and v.can_carry(u))


# -- validation ---------------------------------------------------------------

def validate(cgras: Cgras, rates: Sequence[float] | None = None) -> ValidationResult:
    """Check the DAG, superposition edge conditions, transitivity and gamma.

    Without ``rates`` every nonzero gamma row must sum to one; with ``rates``
    every row of a positive-rate message must.
    """
    res = ValidationResult()
    alloc = cgras.allocation
    n = cgras.n_vertices
    for a, b in sorted(cgras.edges):
        if not (0 <= a < n and 0 <= b < n) or a == b:
            res.errors.append(f"edge v{a}->v{b}: bad vertex index")
    if not res.ok:
        return res
    if len(set(cgras.vertices)) != n:
        res.errors.append("duplicate (encoders, decoders) vertex; merge sub-messages instead")

    cycle = find_cycle(n, cgras.edges)
    if cycle:
        res.errors.append("cycle " + "->".join(f"v{i}" for i in cycle))
    for a, b in sorted(cgras.edges):
        bottom, top = cgras.vertices[a], cgras.vertices[b]
        if not top.encoders <= bottom.encoders:
            res.errors.append(f"edge v{a}->v{b}: top encoders {_fmt(top.encoders)} "
                              f"not within bottom encoders {_fmt(bottom.encoders)}")
        if not top.decoders <= bottom.decoders:
            res.errors.append(f"edge v{a}->v{b}: top decoders {_fmt(top.decoders)} "
                              f"not within bottom decoders {_fmt(bottom.decoders)}")
    for a, c in transitive_holes(cgras.edges):
        res.errors.append(f"transitivity hole: v{a}->v{c} implied but absent")

    g = cgras.gamma
    n_rx = g.shape[0]
    for v, vert in enumerate(cgras.vertices):
        if max(vert.decoders) >= n_rx:
            res.errors.append(f"v{v}: decoder index out of range")
        if max(vert.encoders) >= alloc.n_relays:
            res.errors.append(f"v{v}: encoder index out of range")
    if np.any(g < -GAMMA_TOL) or np.any(g > 1 + GAMMA_TOL):
        res.errors.append("gamma entries must lie in [0, 1]")
    for z in range(n_rx):
        for v, vert in enumerate(cgras.vertices):
            if g[z, v] > GAMMA_TOL:
                if z not in vert.decoders:
                    res.errors.append(f"gamma[{z}, v{v}]: message {z} not decoded by its receiver")
                missing = [j for j in vert.encoders if j < alloc.n_relays and z not in alloc.known[j]]
                if missing:
                    res.errors.append(f"gamma[{z}, v{v}]: relays {missing} do not know message {z}")
        s = g[z].sum()
        needs_one = (rates[z] > 0) if rates is not None else (s > GAMMA_TOL)
        if needs_one and abs(s - 1) > 1e-6:
            res.errors.append(f"gamma row {z} sums to {s:.6g}, expected 1")
    return res


def ensure_valid(cgras: Cgras, rates: Sequence[float] | None = None) -> Cgras:
    res = validate(cgras, rates)
    if not res.ok:
        raise InvalidScheme(res.errors)
    return cgras


# -- rates ----------------------------------------------------------------------

def split_rates(gamma: np.ndarray, rates: Sequence[float]) -> np.ndarray:
    """Sub-message rates: entry ``v`` is ``sum_z gamma[z, v] * rates[z]``."""
    gamma = np.asarray(gamma, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != rates.shape[0]:
        raise ValueError(f"gamma shape {gamma.shape} does not match {rates.shape[0]} rates")
    return rates @ gamma


def prune_zero_rate(cgras: Cgras, rates: Sequence[float]) -> Cgras:
    """Drop vertices carrying no rate; the induced edge set stays closed."""
    sub = split_rates(cgras.gamma, rates)
    keep = [v for v in range(cgras.n_vertices) if sub[v] > 0]
    if len(keep) == cgras.n_vertices:
        return cgras
    index = {old: new for new, old in enumerate(keep)}
    edges = {(index[a], index[b]) for a, b in cgras.edges if a in index and b in index}
    return Cgras(cgras.allocation, tuple(cgras.vertices[v] for v in keep), edges,
                 cgras.gamma[:, keep])


# -- closed sets ----------------------------------------------------------------

def closed_subsets(members: Sequence[int], edges: Iterable[tuple[int, int]]) -> list[frozenset[int]]:
    """All nonempty subsets of ``members`` closed under children.

    Children are taken in the subgraph induced by ``members``.  Vertices are
    decided sinks-first, so a vertex may only join once all of its children
    have joined; every leaf of the search is a distinct closed set.
    """
    members = list(dict.fromkeys(members))
    mset = set(members)
    children = {v: set() for v in members}
    for a, b in edges:
        if a in mset and b in mset:
            children[a].add(b)
    # reverse topological order: every vertex after all of its children
    order: list[int] = []
    done: set[int] = set()

    def place(v, trail=()):
        if v in done:
            return
        if v in trail:
            raise ValueError("cycle among decoded vertices")
        for c in sorted(children[v]):
            place(c, trail + (v,))
        done.add(v)
        order.append(v)

    for v in sorted(members):
        place(v)

    out: list[frozenset[int]] = []

    def grow(i, chosen: frozenset[int]):
        if i == len(order):
            if chosen:
                out.append(chosen)
            return
        v = order[i]
        grow(i + 1, chosen)
        if children[v] <= chosen:
            grow(i + 1, chosen | {v})

    grow(0, frozenset())
    out.sort(key=lambda s: (len(s), sorted(s)))
    return out


def enumerate_closed_sets(cgras: Cgras, receiver: int) -> list[ClosedSet]:
    return [ClosedSet(receiver, s) for s in closed_subsets(cgras.decoded_by(receiver), cgras.edges)]


# -- scheme construction ----------------------------------------------------------

def _normalize_split(entry) -> tuple[float, float]:
    """Return (private, common) fractions from a float or a 2-vector."""
    if np.ndim(entry) == 0:
        f = float(entry)
        if not 0 <= f <= 1:
            raise ValueError(f"split fraction {f} outside [0, 1]")
        return 1.0 - f, f
    p, c = (float(x) for x in entry)
    if p < 0 or c < 0 or abs(p + c - 1) > 1e-9:
        raise ValueError(f"split vector {entry} is not a probability vector")
    return p, c


def build_scheme(alloc: MessageAllocation, n_receivers: int,
                 parts: Sequence[tuple[int, Vertex, float]], superposition: bool) -> Cgras:
    """Assemble a scheme from ``(message, vertex, fraction)`` parts.

    Parts with the same vertex are merged into one column; zero fractions are
    dropped.  With ``superposition`` every admissible edge is added.
    """
    columns: dict[Vertex, np.ndarray] = {}
    for z, vert, frac in parts:
        if frac <= 0:
            continue
        col = columns.setdefault(vert, np.zeros(n_receivers))
        col[z] += frac
    verts = sorted(columns, key=lambda v: v.key)
    gamma = np.column_stack([columns[v] for v in verts]) if verts else np.zeros((n_receivers, 0))
    edges = maximal_edges(verts) if superposition else frozenset()
    return Cgras(alloc, tuple(verts), edges, gamma)


def canonical_schemes(alloc: MessageAllocation, config: NetworkConfig,
                      split_grid: Sequence = (0.5,), cap: int | None = None) -> Iterator[Cgras]:
    """Yield valid schemes for ``alloc`` in a fixed order.

    Each positive-rate message ``z`` is either sent whole on the vertex
    ``(relays knowing z, {z})`` or split into that private part plus a common
    part decoded by a strict superset of ``{z}`` (drawn from positive-rate
    receivers), with the common fraction taken from ``split_grid``.  Parts
    landing on the same vertex are merged.  Combinations are visited by
    increasing number of split messages.  Every vertex set is emitted without
    edges and then, if any edge is admissible, with the maximal superposition
    DAG.  ``cap`` bounds the number of schemes yielded.
    """
    alloc.validate(config)
    active = config.active_receivers
    n_rx = config.n_receivers
    splits = [_normalize_split(e) for e in split_grid]
    splits = [s for s in splits if s[1] > 0]

    def options(z):
        enc = alloc.relays_knowing(z)
        others = [m for m in active if m != z]
        out = []
        for k in range(1, len(others) + 1):
            for extra in itertools.combinations(others, k):
                common = Vertex(enc, frozenset((z,) + extra))
                out.extend((common, s) for s in splits)
        return out

    per_message = {z: options(z) for z in active}
    emitted = 0
    seen: set = set()
    for n_split in range(len(active) + 1):
        for chosen in itertools.combinations(active, n_split):
            for picks in itertools.product(*(per_message[z] for z in chosen)):
                split_of = dict(zip(chosen, picks))
                parts = []
                for z in active:
                    enc = alloc.relays_knowing(z)
                    private = Vertex(enc, frozenset((z,)))
                    if z in split_of:
                        common, (p, c) = split_of[z]
                        parts += [(z, private, p), (z, common, c)]
                    else:
                        parts.append((z, private, 1.0))
                for sup in (False, True):
                    scheme = build_scheme(alloc, n_rx, parts, sup)
                    if sup and not scheme.edges:
                        continue
                    sig = (scheme.vertices, scheme.edges, scheme.gamma.tobytes())
                    if sig in seen:
                        continue
                    seen.add(sig)
                    if cap is not None and emitted >= cap:
                        log.debug("scheme stream truncated at %d", cap)
                        return
                    emitted += 1
                    yield scheme


# -- (de)serialisation ---------------------------------------------------------------

def scheme_to_dict(cgras: Cgras) -> dict:
    return {
        "allocation": cgras.allocation.to_lists(),
        "vertices": [{"encoders": sorted(v.encoders), "decoders": sorted(v.decoders)}
                     for v in cgras.vertices],
        "edges": [list(e) for e in sorted(cgras.edges)],
        "gamma": [[float(x) for x in row] for row in cgras.gamma],
    }


def scheme_from_dict(doc: dict) -> Cgras:
    try:
        alloc = MessageAllocation.from_lists(doc["allocation"])
        verts = tuple(Vertex(frozenset(v["encoders"]), frozenset(v["decoders"]))
                      for v in doc["vertices"])
        edges = frozenset(tuple(e) for e in doc.get("edges", []))
        gamma = np.array(doc["gamma"], dtype=float, ndmin=2)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0]), "missing field") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError("scheme", str(exc)) from exc
    try:
        return Cgras(alloc, verts, edges, gamma)
    except ValueError as exc:
        raise ConfigError("gamma", str(exc)) from exc


def to_dot(cgras: Cgras, subrates: Sequence[float] | None = None) -> str:
    lines = ["digraph cgras {"]
    for i, v in enumerate(cgras.vertices):
        rate = "" if subrates is None else f" rate={float(subrates[i]):.6g}"
        lines.append(f"v{i} [encoders={_fmt(v.encoders)} decoders={_fmt(v.decoders)}{rate}]")
    for a, b in sorted(cgras.edges):
        lines.append(f"v{a} -> v{b}")
    lines.append("}")
    return "\n".join(lines) + "\n"
