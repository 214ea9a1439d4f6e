import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relay_energy.cgras import Cgras, ClosedSet, Vertex, enumerate_closed_sets, maximal_edges
from relay_energy.gaussian import (ClosureError, MixingMatrix, SupportError, capacity_scalar,
                                   logdet_bits, outer_bound_constraints, rate_bound,
                                   region_constraints, relay_link_power, snr_for_rate,
                                   sum_rate_bound)
from relay_energy.model import MessageAllocation, NetworkConfig
from relay_energy.oracle import brute_closed_sets, mc_mutual_information

from helpers import cgauss, full_allocation, nonempty_subsets, random_dag_scheme, random_mixing


def V(enc, dec):
    return Vertex(frozenset(enc), frozenset(dec))


@pytest.mark.parametrize("snr, bits", [(0, 0), (3, 1), (15, 2)])
def test_capacity_scalar(snr, bits):
    assert capacity_scalar(snr) == pytest.approx(bits, abs=1e-15)
    assert snr_for_rate(bits) == pytest.approx(snr, abs=1e-12)


def test_capacity_negative():
    with pytest.raises(ValueError):
        capacity_scalar(-1)


def p2p_config(rate=1.0):
    return NetworkConfig(np.ones(1), np.ones((1, 1)), np.array([rate]))


def test_bound_point_to_point():
    scheme = Cgras(MessageAllocation.from_lists([[0]]), (V({0}, {0}),), frozenset(), [[1.0]])
    A = MixingMatrix([[math.sqrt(3)]], scheme.vertices)
    c = rate_bound(p2p_config(), A, 0, ClosedSet(0, frozenset({0})), [0])
    assert c.bound == pytest.approx(1.0, abs=1e-12)


def test_bound_coherent_combining():
    cfg = NetworkConfig(np.ones(2), np.ones((1, 2)), np.array([1.0]))
    verts = (V({0, 1}, {0}),)
    A = MixingMatrix([[math.sqrt(2)], [math.sqrt(2)]], verts)
    c = rate_bound(cfg, A, 0, ClosedSet(0, frozenset({0})), [0])
    assert c.bound == pytest.approx(0.5 * math.log2(9))


def interference_case():
    cfg = NetworkConfig(np.ones(2), np.ones((2, 2)), np.array([1.0, 1.0]))
    verts = (V({0}, {0}), V({1}, {1}))
    A = MixingMatrix([[math.sqrt(3), 0], [0, 1.0]], verts)
    return cfg, verts, A


def test_bound_with_interference():
    cfg, verts, A = interference_case()
    c = rate_bound(cfg, A, 0, ClosedSet(0, frozenset({0})), [0])
    assert c.bound == pytest.approx(0.5 * math.log2(5 / 2))
    est = mc_mutual_information(cfg.access_gains[0], A.entries, [0], [0], 200_000, seed=0)
    assert abs(est.value - c.bound) <= 0.02


def test_support_and_closure_errors():
    cfg, verts, _ = interference_case()
    with pytest.raises(SupportError):
        rate_bound(cfg, MixingMatrix([[1, 1], [0, 1]], verts), 0, ClosedSet(0, frozenset({0})), [0])
    A = MixingMatrix([[1.0]], (V({0}, {0}),))
    with pytest.raises(ClosureError):
        rate_bound(p2p_config(), A, 0, ClosedSet(0, frozenset({0})), [])


def test_closure_checked_against_edges():
    cfg = NetworkConfig(np.ones(1), np.ones((2, 1)), np.ones(2))
    verts = (V({0}, {0, 1}), V({0}, {0}))
    s = Cgras(full_allocation(1, 2), verts, {(0, 1)}, [[0.5, 0.5], [1, 0]])
    A = MixingMatrix([[1.0, 1.0]], verts)
    with pytest.raises(ClosureError):
        rate_bound(cfg, A, 0, ClosedSet(0, frozenset({0})), [0, 1], cgras=s)


def test_constraint_counts():
    single = Cgras(full_allocation(1, 1), (V({0}, {0}),), frozenset(), [[1.0]])
    assert len(region_constraints(p2p_config(), single, MixingMatrix([[1.0]], single.vertices))) == 1
    cfg = NetworkConfig(np.ones(1), np.ones((2, 1)), np.ones(2))
    verts = (V({0}, {0, 1}), V({0}, {0}))
    s = Cgras(full_allocation(1, 2), verts, frozenset(), [[0.5, 0.5], [1, 0]])
    cons = region_constraints(cfg, s, MixingMatrix([[1.0, 1.0]], verts))
    assert sum(c.receiver == 0 for c in cons) == 3


def test_constraint_count_two_relay_three_receiver_maximal():
    verts = tuple(V(e, d) for e in nonempty_subsets(2) for d in nonempty_subsets(3))
    s = Cgras(full_allocation(2, 3), verts, maximal_edges(verts), np.zeros((3, len(verts))))
    rng = np.random.default_rng(3)
    cfg = NetworkConfig(cgauss(rng, 2), cgauss(rng, (3, 2)), np.ones(3))
    A = MixingMatrix(random_mixing(rng, s, 2), verts)
    decoders = [sorted(v.decoders) for v in verts]
    expected = sum(len(brute_closed_sets(decoders, s.edges, z)) for z in range(3))
    assert len(region_constraints(cfg, s, A)) == expected


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sum_rate_cut(seed):
    rng = np.random.default_rng(seed)
    s = random_dag_scheme(rng, 2, 2, 6)
    cfg = NetworkConfig(cgauss(rng, 2), cgauss(rng, (2, 2)), np.ones(2))
    A = MixingMatrix(random_mixing(rng, s, 2), s.vertices)
    everyone = tuple(V(e, {0, 1}) for e in nonempty_subsets(2))
    # a receiver decoding every vertex: its full closed set is the sum-rate cut
    s_all = Cgras(s.allocation, everyone, frozenset(), np.zeros((2, 3)))
    A_all = MixingMatrix(random_mixing(rng, s_all, 2), everyone)
    c = rate_bound(cfg, A_all, 0, ClosedSet(0, frozenset(range(3))), range(3))
    assert c.bound == pytest.approx(sum_rate_bound(cfg, A_all, 0), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1.0, 5.0))
def test_bound_monotone_in_column_scale(seed, t):
    rng = np.random.default_rng(seed)
    s = random_dag_scheme(rng, 2, 2, 6)
    cfg = NetworkConfig(cgauss(rng, 2), cgauss(rng, (2, 2)), np.ones(2))
    a = random_mixing(rng, s, 2)
    for z in range(2):
        decoded = s.decoded_by(z)
        for F in enumerate_closed_sets(s, z):
            base = rate_bound(cfg, MixingMatrix(a, s.vertices), z, F, decoded).bound
            v = sorted(F.members)[int(rng.integers(len(F.members)))]
            up = a.copy()
            up[:, v] *= t
            assert rate_bound(cfg, MixingMatrix(up, s.vertices), z, F, decoded).bound >= base - 1e-12
            outside = [w for w in range(s.n_vertices) if w not in decoded]
            if outside:
                noisy = a.copy()
                noisy[:, outside[0]] *= t
                assert rate_bound(cfg, MixingMatrix(noisy, s.vertices), z, F, decoded).bound <= base + 1e-12


def test_chain_bound_ordering():
    cfg = NetworkConfig(np.ones(1), np.array([[1.0], [0.5]]), np.ones(2))
    verts = (V({0}, {0, 1}), V({0}, {0}))  # bottom v0, top v1
    s = Cgras(full_allocation(1, 2), verts, {(0, 1)}, [[0.5, 0.5], [1, 0]])
    A = MixingMatrix([[1.0, 2.0]], verts)
    cons = {c.closed_set.members: c.bound for c in region_constraints(cfg, s, A) if c.receiver == 0}
    assert set(cons) == {frozenset({1}), frozenset({0, 1})}
    assert cons[frozenset({0, 1})] > cons[frozenset({1})]


def test_relay_link_examples():
    cfg = NetworkConfig(np.array([1.0, 2.0]), np.ones((2, 2)), np.array([1.0, 0.0]))
    bs = relay_link_power(cfg, MessageAllocation.from_lists([[0], [0]]))
    assert bs.per_relay == pytest.approx([3.0, 0.75])
    bs = relay_link_power(cfg, MessageAllocation.from_lists([[0], []]))
    assert bs.per_relay[1] == 0.0


def test_relay_link_cap():
    cfg = NetworkConfig(np.ones(1), np.ones((1, 1)), np.ones(1), bs_power_cap=2.0)
    assert not relay_link_power(cfg, MessageAllocation.from_lists([[0]])).feasible


@given(st.lists(st.floats(0, 4), min_size=1, max_size=3),
       st.floats(0.1, 10), st.floats(-math.pi, math.pi))
def test_relay_link_round_trip(rates, mag, phase):
    n = len(rates)
    d = mag * np.exp(1j * phase)
    cfg = NetworkConfig(np.array([d]), np.ones((n, 1)), np.array(rates))
    alloc = MessageAllocation.from_lists([[z for z in range(n) if rates[z] > 0]])
    p = relay_link_power(cfg, alloc).per_relay[0]
    assert capacity_scalar(abs(d) ** 2 * p) == pytest.approx(sum(rates), abs=1e-9)


@given(st.integers(0, 2 ** 32 - 1))
def test_relay_link_monotone_in_cognition(seed):
    rng = np.random.default_rng(seed)
    cfg = NetworkConfig(cgauss(rng, 3), cgauss(rng, (3, 3)), rng.uniform(0.1, 2, 3))
    known = [set(np.flatnonzero(rng.random(3) < 0.5)) for _ in range(3)]
    known[0] |= {0, 1, 2}
    small = MessageAllocation.from_lists(known)
    j, z = int(rng.integers(3)), int(rng.integers(3))
    known[j].add(z)
    big = MessageAllocation.from_lists(known)
    assert np.all(relay_link_power(cfg, big).per_relay >= relay_link_power(cfg, small).per_relay)


def test_outer_bound_examples():
    cfg = NetworkConfig(np.ones(1), np.array([[0.5]]), np.ones(1))
    cons = outer_bound_constraints(cfg, full_allocation(1, 1), np.array([[2.0]]))
    assert cons[0].bound == pytest.approx(0.5 * math.log2(1 + 0.25 * 4))

    cfg2 = NetworkConfig(np.ones(2), np.eye(2), np.ones(2))
    zero = outer_bound_constraints(cfg2, full_allocation(2, 2), np.zeros((2, 2)))
    assert all(c.bound == 0 for c in zero)
    diag = outer_bound_constraints(cfg2, full_allocation(2, 2), np.diag([math.sqrt(3)] * 2))
    joint = [c for c in diag if c.receivers == (0, 1)][0]
    assert joint.bound == pytest.approx(2.0)
    assert joint.required == 2.0 and joint.slack == pytest.approx(0.0)


def test_outer_bound_support():
    cfg = NetworkConfig(np.ones(2), np.eye(2), np.ones(2))
    with pytest.raises(SupportError):
        outer_bound_constraints(cfg, MessageAllocation.from_lists([[0], [1]]), np.ones((2, 2)))


def test_logdet_matches_numpy():
    rng = np.random.default_rng(5)
    m = cgauss(rng, (3, 3))
    ref = 0.5 * np.log2(np.linalg.det(np.eye(3) + m @ m.conj().T).real)
    assert logdet_bits(m) == pytest.approx(ref)


@pytest.mark.parametrize("seed", range(4))
def test_logdet_bound_matches_monte_carlo(seed):
    """Small instances: every closed-set bound agrees with the sampled estimate."""
    rng = np.random.default_rng(100 + seed)
    s = random_dag_scheme(rng, 2, 2, 4)
    cfg = NetworkConfig(cgauss(rng, 2), cgauss(rng, (2, 2)), np.ones(2))
    a = random_mixing(rng, s, 2)
    A = MixingMatrix(a, s.vertices)
    for k, c in enumerate(region_constraints(cfg, s, A)):
        est = mc_mutual_information(cfg.access_gains[c.receiver], a, c.lhs_vertices,
                                    s.decoded_by(c.receiver), 100_000, seed=k)
        assert est.agrees(c.bound, n_sigma=4.5)
