import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyflow.cutset import (
    CutCertificate, assignment_cost, crossing_edges, cut_cost, decomposition_check,
    edge_set_cost, flow_cut_gap, layered_orbits, min_cut,
)
from polyflow.errors import InvalidInputError, SizeCapError
from polyflow.flowsolve import FlowProblem, layered_network
from polyflow.fuzz import random_bidirected_net, random_directed_net, random_pairs
from polyflow.netmodel import Edge, PolyNet, TrafficPattern
from polyflow.polymatroid import GaussianMacLog, Modular, UniformCap


def mac_into_v():
    es = [Edge("u1>v", "u1", "v"), Edge("u2>v", "u2", "v")]
    return PolyNet(["u1", "u2", "v"], es,
                   {"v": GaussianMacLog([1, 1], 1.0, ground=["u1>v", "u2>v"])},
                   {"u1": Modular([1.0], ground=["u1>v"]),
                    "u2": Modular([1.0], ground=["u2>v"])})


def brute_cost(net, edges):
    """Cheapest assignment found by trying every endpoint choice."""
    best = math.inf
    for ends in itertools.product((0, 1), repeat=len(edges)):
        a = {e: (net.edge(e).head if b else net.edge(e).tail) for e, b in zip(edges, ends)}
        best = min(best, assignment_cost(net, a))
    return best


def brute_min_cut(net, tr):
    """Cut bound per separated set from every vertex subset."""
    bounds = {}
    for r in range(1, len(net.nodes)):
        for om in itertools.combinations(net.nodes, r):
            sep = frozenset(i for i, c in enumerate(tr.commodities)
                            if c.source in om and c.sink not in om)
            if sep:
                c = brute_cost(net, crossing_edges(net, om))
                bounds[sep] = min(bounds.get(sep, math.inf), c)
    return {s: v for s, v in bounds.items() if math.isfinite(v)}


# ---------------------------------------------------------------------------
# Frozen examples
# ---------------------------------------------------------------------------

def test_mac_cut_assigns_both_edges_to_receiver():
    cert = cut_cost(mac_into_v(), {"u1", "u2"})
    assert cert.cost == pytest.approx(math.log2(3), abs=1e-9)
    assert cert.cost == pytest.approx(1.585, abs=1e-3)
    assert dict(cert.assignment) == {"u1>v": "v", "u2>v": "v"}
    assert cert.is_valid(mac_into_v())
    assert cert.recompute(mac_into_v()) == pytest.approx(cert.cost, abs=1e-12)


def test_empty_crossing_costs_nothing():
    net = mac_into_v()
    assert edge_set_cost(net, []).cost == 0.0
    assert cut_cost(net, {"v"}).cost == 0.0


def test_single_sender_cut_prefers_cheap_side():
    cert = cut_cost(mac_into_v(), {"u1"})
    assert cert.cost == pytest.approx(1.0, abs=1e-9)


def test_layered_region_bounds():
    net, tr = layered_network(2, [3])
    rep = min_cut(net, tr)
    got = {tuple(sorted(s)): c.cost for s, c in rep.bounds.items()}
    assert got == pytest.approx({(0,): 1.0, (1,): 1.0, (0, 1): 2.0}, abs=1e-9)


def test_orbits_match_full_enumeration():
    net, tr = layered_network(2, [2, 3])
    full = min_cut(net, tr)
    fast = min_cut(net, tr, orbits=layered_orbits([2, 3]))
    assert fast.cuts_examined < full.cuts_examined
    assert set(fast.bounds) == set(full.bounds)
    for s in full.bounds:
        assert fast.bounds[s].cost == pytest.approx(full.bounds[s].cost, abs=1e-9)


def test_orbits_must_avoid_terminals():
    net, tr = layered_network(2, [2])
    with pytest.raises(InvalidInputError):
        min_cut(net, tr, orbits=[["s1", "L1n1"]])


def test_vertex_cap():
    net, tr = layered_network(2, [8, 8])
    with pytest.raises(SizeCapError):
        min_cut(net, tr)


def test_assignment_cap_and_fallback():
    hub = [Edge(f"u{i}>h", f"u{i}", "h") for i in range(4)]
    net = PolyNet([f"u{i}" for i in range(4)] + ["h"], hub,
                  {"h": GaussianMacLog(np.ones(4), 1.0, ground=[e.id for e in hub])},
                  {f"u{i}": Modular([0.5], ground=[f"u{i}>h"]) for i in range(4)})
    F = [e.id for e in hub]
    with pytest.raises(SizeCapError):
        edge_set_cost(net, F, assign_cap=2)
    approx = edge_set_cost(net, F, assign_cap=2, fallback=True)
    assert approx.approximate
    assert approx.cost >= edge_set_cost(net, F).cost - 1e-12


def test_separated_antennas_unbounded_cut_is_dropped():
    net = PolyNet(["a", "b"], [Edge("a>b", "a", "b")])
    rep = min_cut(net, TrafficPattern.unicast([("a", "b")]))
    assert rep.bounds == {} and rep.value == math.inf


def test_unicast_and_layered_gap_is_one():
    es = [Edge("s>a", "s", "a"), Edge("a>t", "a", "t"), Edge("s>t", "s", "t")]
    net = PolyNet(["s", "a", "t"], es,
                  {"a": Modular([1.0], ground=["s>a"]), "t": Modular([2.0, 0.5], ground=["a>t", "s>t"])})
    tr = TrafficPattern.unicast([("s", "t")])
    assert flow_cut_gap(net, tr, n_random=5).gap == pytest.approx(1.0, abs=1e-6)
    assert flow_cut_gap(*layered_network(2, [2]), n_random=10).gap == pytest.approx(1.0, abs=1e-6)


def test_decomposition_examples():
    net = mac_into_v()
    lhs, rhs, holds = decomposition_check(net, {"u1>v": "a", "u2>v": "b"}, {"u1", "u2"})
    assert lhs == pytest.approx(math.log2(3)) and rhs == pytest.approx(2.0) and holds
    lhs, rhs, holds = decomposition_check(net, {"u1>v": "a", "u2>v": "a"}, {"u1", "u2"})
    assert lhs == pytest.approx(rhs) and holds
    with pytest.raises(InvalidInputError):
        decomposition_check(net, {"u1>v": "a"}, {"u1", "u2"})


def test_certificate_validity_checks():
    net = mac_into_v()
    bad = CutCertificate(frozenset({"u1"}), ("u1>v",), {"u1>v": "u2"}, 0.0)
    assert not bad.is_valid(net)
    with pytest.raises(InvalidInputError):
        bad.recompute(net)
    short = CutCertificate(frozenset({"u1", "u2"}), ("u1>v", "u2>v"), {"u1>v": "v"}, 0.0)
    assert not short.is_valid(net)


def test_uniform_cover_cost():
    # two broadcasting tails with flat costs feeding two flat-cost heads
    es = [Edge("a>x", "a", "x"), Edge("a>y", "a", "y"), Edge("b>y", "b", "y")]
    net = PolyNet(["a", "b", "x", "y"], es,
                  {"x": UniformCap(1.0, ground=["a>x"]), "y": UniformCap(0.3, ground=["a>y", "b>y"])},
                  {"a": UniformCap(0.5, ground=["a>x", "a>y"]), "b": UniformCap(2.0, ground=["b>y"])})
    F = [e.id for e in es]
    assert edge_set_cost(net, F).cost == pytest.approx(0.8, abs=1e-12)
    assert edge_set_cost(net, F).cost == pytest.approx(brute_cost(net, F), abs=1e-12)


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------

seeds = st.integers(0, 10**6)


@given(seeds)
def test_cut_cost_matches_brute_assignment(seed):
    net = random_directed_net(6, 4, seed=seed)
    rng = np.random.default_rng(seed)
    om = [v for v in net.nodes if rng.random() < 0.5]
    cert = cut_cost(net, om)
    F = crossing_edges(net, om)
    assert cert.is_valid(net)
    assert cert.cost == pytest.approx(brute_cost(net, F), abs=1e-9)
    if math.isfinite(cert.cost):
        assert cert.recompute(net) == pytest.approx(cert.cost, abs=1e-9)


@given(seeds, st.integers(1, 3))
def test_min_cut_matches_brute_enumeration(seed, k):
    net = random_directed_net(5, 3, seed=seed)
    tr = TrafficPattern.unicast(random_pairs(net.nodes, k, seed))
    rep = min_cut(net, tr)
    ref = brute_min_cut(net, tr)
    assert set(rep.bounds) == set(ref)
    for s, v in ref.items():
        assert rep.bounds[s].cost == pytest.approx(v, abs=1e-9)


@given(seeds)
def test_greedy_fallback_never_beats_exact(seed):
    net = random_directed_net(6, 4, seed=seed)
    rng = np.random.default_rng(seed + 1)
    om = [v for v in net.nodes if rng.random() < 0.5]
    F = crossing_edges(net, om)
    exact = edge_set_cost(net, F).cost
    approx = edge_set_cost(net, F, assign_cap=0, fallback=True).cost
    assert approx >= exact - 1e-9


@given(seeds, st.integers(1, 3))
def test_weak_duality(seed, k):
    net = random_directed_net(6, 4, seed=seed)
    tr = TrafficPattern.unicast(random_pairs(net.nodes, k, seed))
    rep = min_cut(net, tr)
    prob = FlowProblem(net, tr)
    rng = np.random.default_rng(seed)
    for w in np.vstack([np.eye(k), rng.random((3, k))]):
        assert prob.support(w) <= rep.support(w) + 1e-6


@given(seeds)
def test_bidirected_gap_at_least_one(seed):
    net, _ = random_bidirected_net(5, 3, seed=seed)
    tr = TrafficPattern.unicast(random_pairs(net.nodes, 2, seed))
    rep = flow_cut_gap(net, tr, n_random=4, seed=seed)
    assert rep.gap >= 1 - 1e-6
    assert np.all(rep.ratios >= 1 - 1e-6)


@given(seeds)
def test_decomposition_always_holds(seed):
    net = random_directed_net(6, 4, seed=seed)
    rng = np.random.default_rng(seed)
    om = [v for v in net.nodes if rng.random() < 0.5]
    F = crossing_edges(net, om)
    part = {e: int(rng.integers(3)) for e in F}
    lhs, rhs, holds = decomposition_check(net, part, om)
    assert holds
