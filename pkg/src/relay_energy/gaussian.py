"""Closed-form Gaussian rates for the relay and access links.

Rates use ``C(x) = 1/2 * log2(1 + x)`` bits per channel use throughout, also
for the complex channels of this model.  The convention is applied the same
way everywhere, so all reported rates are mutually consistent.

Codewords are unit-variance complex Gaussians ``U`` and the relay inputs are
``X = A U`` for a mixing matrix ``A`` whose column ``v`` is nonzero only on
the encoders of vertex ``v``.  The squared row norms of ``A`` are the relay
powers actually spent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cgras import Cgras, ClosedSet, Vertex, enumerate_closed_sets
from .model import MessageAllocation, NetworkConfig

LN2 = math.log(2.0)
CLAMP = 1e-12


class SupportError(ValueError):
    pass


class ClosureError(ValueError):
    pass


def capacity_scalar(snr: float) -> float:
    if snr < 0:
        raise ValueError(f"negative SNR {snr}")
    return 0.5 * math.log1p(snr) / LN2


def snr_for_rate(rate: float) -> float:
    """Inverse of :func:`capacity_scalar`."""
    if rate < 0:
        raise ValueError(f"negative rate {rate}")
    return math.expm1(2 * rate * LN2)


def _clamp(bits: float) -> float:
    return 0.0 if bits < CLAMP else bits


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    entries: np.ndarray
    vertices: tuple[Vertex, ...]

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex, ndmin=2)
        if a.shape[1] != len(self.vertices):
            raise ValueError(f"mixing matrix has {a.shape[1]} columns for {len(self.vertices)} vertices")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "vertices", tuple(self.vertices))

    @classmethod
    def zeros(cls, n_relays: int, vertices: Sequence[Vertex]) -> "MixingMatrix":
        return cls(np.zeros((n_relays, len(vertices)), dtype=complex), tuple(vertices))

    def column(self, v: int) -> np.ndarray:
        return self.entries[:, v]

    def row_powers(self) -> np.ndarray:
        return np.sum(np.abs(self.entries) ** 2, axis=1)

    def support_violations(self) -> list[tuple[int, int]]:
        return [(j, v) for v, vert in enumerate(self.vertices)
                for j in range(self.entries.shape[0])
                if self.entries[j, v] != 0 and j not in vert.encoders]

    def check_support(self) -> None:
        bad = self.support_violations()
        if bad:
            raise SupportError(f"entries outside encoder sets (relay, vertex): {bad}")


@dataclass(frozen=True)
class RateConstraint:
    """``sum(subrate[v] for v in lhs_vertices) <= bound`` at ``receiver``."""

    receiver: int
    closed_set: ClosedSet
    bound: float
    lhs_vertices: tuple[int, ...]

    def slack(self, subrates: Sequence[float]) -> float:
        return self.bound - float(sum(subrates[v] for v in self.lhs_vertices))

    def ident(self) -> str:
        return f"rx{self.receiver}:{self.closed_set.label()}"


def _received_power(h: np.ndarray, a: np.ndarray, cols) -> float:
    return math.fsum(abs(complex(h @ a[:, v])) ** 2 for v in cols)


def rate_bound(config: NetworkConfig, A: MixingMatrix, receiver: int, F: ClosedSet,
               decoded: Sequence[int], cgras: Cgras | None = None) -> RateConstraint:
    """Bound on the sum of sub-rates in ``F`` when ``receiver`` decodes ``decoded``.

    Codewords outside ``decoded`` are treated as noise; those in
    ``decoded`` but not in ``F`` are known.  With ``cgras`` the child-closure
    of ``F`` is also checked.
    """
    A.check_support()
    decoded = set(decoded)
    members = set(F.members)
    if not members <= decoded:
        raise ClosureError(f"closed set {F.label()} is not within the decoded vertices")
    if cgras is not None:
        for a, b in cgras.edges:
            if a in members and b in decoded and b not in members:
                raise ClosureError(f"closed set {F.label()} misses child v{b} of v{a}")
    h = config.access_gains[receiver]
    a = A.entries
    outside = [v for v in range(a.shape[1]) if v not in decoded]
    interference = _received_power(h, a, outside)
    signal = _received_power(h, a, sorted(members))
    bits = 0.5 * (math.log1p(signal + interference) - math.log1p(interference)) / LN2
    return RateConstraint(receiver, F, _clamp(bits), tuple(sorted(members)))


def region_constraints(config: NetworkConfig, cgras: Cgras, A: MixingMatrix) -> list[RateConstraint]:
    """One constraint per (receiver, closed set of its decoded vertices)."""
    out = []
    for z in range(config.n_receivers):
        decoded = cgras.decoded_by(z)
        for F in enumerate_closed_sets(cgras, z):
            out.append(rate_bound(config, A, z, F, decoded))
    return out


def violated(constraints: Sequence[RateConstraint], subrates: Sequence[float],
             tol: float = 1e-9) -> list[RateConstraint]:
    return [c for c in constraints if c.slack(subrates) < -tol]


def sum_rate_bound(config: NetworkConfig, A: MixingMatrix, receiver: int) -> float:
    """Cut where the receiver decodes everything: ``C`` of the total received power."""
    h = config.access_gains[receiver]
    return capacity_scalar(_received_power(h, A.entries, range(A.entries.shape[1])))


# -- relay link -------------------------------------------------------------------

@dataclass(frozen=True)
class BackhaulPower:
    """Minimal per-relay BS powers; ``feasible`` is False past the BS cap."""

    per_relay: np.ndarray
    total: float
    feasible: bool


def relay_link_power(config: NetworkConfig, alloc: MessageAllocation,
                     rates: Sequence[float] | None = None) -> BackhaulPower:
    """Smallest BS power per relay so each relay decodes all of its messages."""
    rates = config.target_rates if rates is None else np.asarray(rates, dtype=float)
    if np.any(rates < 0):
        raise ValueError("rates must be nonnegative")
    powers = np.zeros(config.n_relays)
    for j, known in enumerate(alloc.known):
        load = math.fsum(rates[z] for z in known)
        powers[j] = snr_for_rate(load) / abs(config.relay_gains[j]) ** 2
    total = math.fsum(powers)
    return BackhaulPower(powers, total, total <= config.bs_power_cap)


# -- access link outer bound ----------------------------------------------------------

@dataclass(frozen=True)
class OuterBoundConstraint:
    receivers: tuple[int, ...]
    required: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.required

    def ident(self) -> str:
        return "cut{" + ",".join(map(str, self.receivers)) + "}"


def outer_support_violations(alloc: MessageAllocation, a_ob: np.ndarray) -> list[tuple[int, int]]:
    return [(j, z) for j in range(a_ob.shape[0]) for z in range(a_ob.shape[1])
            if a_ob[j, z] != 0 and z not in alloc.known[j]]


def logdet_bits(m: np.ndarray) -> float:
    """``1/2 log2 det(I + M M^H)`` via a Cholesky factor."""
    if m.size == 0:
        return 0.0
    k = np.eye(m.shape[0]) + m @ m.conj().T
    chol = np.linalg.cholesky(k)
    return float(np.sum(np.log(np.abs(np.diag(chol))))) / LN2


def outer_bound_constraints(config: NetworkConfig, alloc: MessageAllocation,
                            a_ob: np.ndarray, rates: Sequence[float] | None = None
                            ) -> list[OuterBoundConstraint]:
    """Cut-set constraints for every nonempty receiver subset ``Z``.

    ``a_ob`` has one column per message.  Conditioning on the messages outside
    ``Z`` removes their columns, so the bound keeps rows and columns in ``Z``.
    """
    a_ob = np.asarray(a_ob, dtype=complex)
    if a_ob.shape != (config.n_relays, config.n_receivers):
        raise ValueError(f"outer-bound mixing must be {config.n_relays}x{config.n_receivers}")
    bad = outer_support_violations(alloc, a_ob)
    if bad:
        raise SupportError(f"entries for messages the relay does not know (relay, message): {bad}")
    rates = config.target_rates if rates is None else np.asarray(rates, dtype=float)
    h = config.access_gains
    out = []
    for k in range(1, config.n_receivers + 1):
        for zs in itertools.combinations(range(config.n_receivers), k):
            idx = list(zs)
            m = h[np.ix_(idx, range(config.n_relays))] @ a_ob[:, idx]
            out.append(OuterBoundConstraint(zs, math.fsum(rates[z] for z in zs),
                                            _clamp(logdet_bits(m))))
    return out


__all__ = [
    "MixingMatrix", "RateConstraint", "BackhaulPower", "OuterBoundConstraint",
    "SupportError", "ClosureError", "capacity_scalar", "snr_for_rate", "rate_bound",
    "region_constraints", "violated", "sum_rate_bound", "relay_link_power",
    "outer_bound_constraints", "logdet_bits",
]
