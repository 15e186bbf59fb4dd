"""Seeded random instances: oracles, directed and bidirected networks."""

from __future__ import annotations

import numpy as np

from .netmodel import Edge, PolyNet, ReversalMap, TrafficPattern, edge_id
from .polymatroid import (
    CutErasure, DirectSum, GaussianMacLog, Modular, RankGF, Scaled, TableLookup,
    Truncation, UniformCap, relabel,
)

FAMILIES = ("Modular", "CutErasure", "GaussianMacLog", "RankGF", "UniformCap",
            "Scaled", "Truncation", "DirectSum", "TableLookup")

# Families cheap enough to sit on every node of a fuzzed network.
NODE_FAMILIES = ("Modular", "CutErasure", "GaussianMacLog", "UniformCap", "Truncation",
                 "RankGF")


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _coverage_table(n, rng):
    """A coverage function: each element covers a random set of weighted items."""
    m = int(rng.integers(2, 6))
    w = rng.uniform(0.1, 1.0, m)
    cover = rng.random((n, m)) < 0.5
    vals = {}
    for mask in range(1 << n):
        items = np.zeros(m, bool)
        S = tuple(i for i in range(n) if mask >> i & 1)
        for i in S:
            items |= cover[i]
        vals[S] = float(w[items].sum())
    return TableLookup(vals, list(range(n)))


def random_oracle(family: str, n: int, seed=None, ground=None):
    """A random member of ``family`` over ``n`` elements (or ``ground``)."""
    rng = _rng(seed)
    g = list(range(n)) if ground is None else list(ground)
    n = len(g)
    if family == "Modular":
        return Modular(rng.uniform(0, 2, n), ground=g)
    if family == "CutErasure":
        return CutErasure(float(rng.uniform(0.05, 0.95)), ground=g)
    if family == "GaussianMacLog":
        return GaussianMacLog(rng.uniform(0.1, 2.0, n), float(rng.uniform(0.2, 5.0)), ground=g)
    if family == "RankGF":
        q = int(rng.choice([2, 3, 5]))
        cols = int(rng.integers(1, 4))
        mats = [rng.integers(0, q, (int(rng.integers(1, 3)), cols)) for _ in range(n)]
        return RankGF(q, mats, "rows", ground=g)
    if family == "UniformCap":
        return UniformCap(float(rng.uniform(0.2, 2.0)), ground=g)
    if family == "Scaled":
        inner = random_oracle(str(rng.choice(["Modular", "CutErasure", "GaussianMacLog"])),
                              n, rng, g)
        return Scaled(inner, float(rng.uniform(0.1, 3.0)))
    if family == "Truncation":
        inner = random_oracle(str(rng.choice(["Modular", "GaussianMacLog"])), n, rng, g)
        return Truncation(inner, float(rng.uniform(0.1, 1.0)) * max(inner(g), 1e-3))
    if family == "DirectSum":
        if n < 2:
            return random_oracle("Modular", n, rng, g)
        cut = int(rng.integers(1, n))
        return DirectSum([random_oracle("CutErasure", 0, rng, g[:cut]),
                          random_oracle("GaussianMacLog", 0, rng, g[cut:])])
    if family == "TableLookup":
        t = _coverage_table(n, rng)
        return relabel(t, dict(zip(range(n), g)))
    raise ValueError(f"unknown family {family!r}")


def _node_oracle(ground, rng):
    fam = str(rng.choice(NODE_FAMILIES))
    return random_oracle(fam, 0, rng, ground)


def random_directed_net(n_nodes: int, max_degree: int = 4, p_edge: float = 0.4,
                        seed=None) -> PolyNet:
    """Random digraph with random polymatroidal constraints on every side."""
    rng = _rng(seed)
    nodes = [f"v{i}" for i in range(n_nodes)]
    outd = {v: 0 for v in nodes}
    ind = {v: 0 for v in nodes}
    edges = []
    pairs = [(u, w) for u in nodes for w in nodes if u != w]
    rng.shuffle(pairs)
    for u, w in pairs:
        if outd[u] < max_degree and ind[w] < max_degree and rng.random() < p_edge:
            edges.append(Edge(edge_id(u, w), u, w))
            outd[u] += 1
            ind[w] += 1
    net = PolyNet(nodes, edges)
    in_cap = {v: _node_oracle(net.delta_in(v), rng) for v in nodes if net.delta_in(v)}
    out_cap = {v: _node_oracle(net.delta_out(v), rng) for v in nodes if net.delta_out(v)}
    return PolyNet(nodes, edges, in_cap, out_cap)


def random_bidirected_net(n_nodes: int, max_degree: int = 4, p_edge: float = 0.5,
                          seed=None):
    """Random bidirected network: ``(net, tau)``.

    Each undirected link becomes two opposite edges, and the incoming
    constraint of a node is its outgoing constraint seen through the
    reversal map, so the result is bidirected by construction.
    """
    rng = _rng(seed)
    nodes = [f"v{i}" for i in range(n_nodes)]
    deg = {v: 0 for v in nodes}
    edges = []
    # a random spanning tree first keeps the graph connected
    order = list(rng.permutation(nodes))
    links = []
    for i in range(1, len(order)):
        cands = [u for u in order[:i] if deg[u] < max_degree]
        u = cands[int(rng.integers(len(cands)))] if cands else order[i - 1]
        links.append((u, order[i]))
        deg[u] += 1
        deg[order[i]] += 1
    for i, u in enumerate(nodes):
        for w in nodes[i + 1:]:
            if (u, w) in links or (w, u) in links:
                continue
            if deg[u] < max_degree and deg[w] < max_degree and rng.random() < p_edge:
                links.append((u, w))
                deg[u] += 1
                deg[w] += 1
    for u, w in links:
        edges += [Edge(edge_id(u, w), u, w), Edge(edge_id(w, u), w, u)]
    net = PolyNet(nodes, edges)
    out_cap, in_cap = {}, {}
    for v in nodes:
        outs = list(net.delta_out(v))
        if not outs:
            continue
        f = _node_oracle(outs, rng)
        out_cap[v] = f
        in_cap[v] = relabel(f, {e: edge_id(net.edge(e).head, v) for e in outs})
    net = PolyNet(nodes, edges, in_cap, out_cap)
    return net, ReversalMap.infer(net)


def random_pairs(nodes, k: int, seed=None):
    """``k`` distinct ordered source/sink pairs drawn from ``nodes``."""
    rng = _rng(seed)
    allp = [(s, t) for s in nodes for t in nodes if s != t]
    idx = rng.choice(len(allp), size=min(k, len(allp)), replace=False)
    return [allp[i] for i in sorted(idx)]


def random_unicast_instance(n_nodes=6, max_degree=4, seed=None):
    rng = _rng(seed)
    net = random_directed_net(n_nodes, max_degree, seed=rng)
    (s, t), = random_pairs(net.nodes, 1, rng)
    return net, TrafficPattern.unicast([(s, t)])


def random_broadcast_instance(n_nodes=6, n_sinks=2, max_degree=4, seed=None):
    rng = _rng(seed)
    net = random_directed_net(n_nodes, max_degree, seed=rng)
    perm = list(rng.permutation(net.nodes))
    return net, TrafficPattern.broadcast(perm[0], perm[1:1 + n_sinks])


def random_x_instance(n_nodes=6, n_src=2, n_snk=2, max_degree=4, seed=None):
    rng = _rng(seed)
    net = random_directed_net(n_nodes, max_degree, seed=rng)
    perm = list(rng.permutation(net.nodes))
    return net, TrafficPattern.x_traffic(perm[:n_src], perm[n_src:n_src + n_snk])


def random_group_instance(n_nodes=6, group_size=3, max_degree=4, seed=None):
    rng = _rng(seed)
    net = random_directed_net(n_nodes, max_degree, p_edge=0.5, seed=rng)
    perm = list(rng.permutation(net.nodes))
    return net, TrafficPattern.group(perm[:group_size])
