"""Polymatroidal network data model and the graph transforms built on it.

A :class:`PolyNet` is a directed multigraph with explicit edge ids.  Each
node carries an incoming oracle over its in-edges and an outgoing oracle over
its out-edges; a node without an entry is unconstrained on that side.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, SizeCapError
from .polymatroid import (
    EXHAUSTIVE_CAP, TOL_EXACT, DirectSum, SetFunction, Unbounded,
    is_monotone, is_submodular, oracle_from_record,
)

__all__ = [
    "Edge", "PolyNet", "Commodity", "TrafficPattern", "ReversalMap",
    "validate", "is_bidirected", "add_super_source_sink", "split_by_color",
    "expand_antennas", "edge_id", "net_to_record", "net_from_record",
    "traffic_to_record", "traffic_from_record", "extend_unbounded",
]


def edge_id(tail, head) -> str:
    """Default edge id for a link between two named vertices."""
    return f"{tail}>{head}"


@dataclass(frozen=True)
class Edge:
    id: Hashable
    tail: Hashable
    head: Hashable


class PolyNet:
    """Directed graph with joint submodular capacities at every node.

    Parameters
    ----------
    nodes : sequence
        Node ids, in a stable order.
    edges : sequence
        ``Edge`` objects or ``(id, tail, head)`` triples.  Ids are unique;
        parallel edges are allowed.
    in_cap, out_cap : mapping, optional
        Node id to oracle over that node's in-edges (resp. out-edges).
        Missing nodes are unconstrained on that side.
    origin : mapping, optional
        Vertex to original wireless node, for split or expanded networks.

    Notes
    -----
    The constructor only rejects defects that make the object unusable
    (duplicate ids).  Everything else is reported by :func:`validate`.
    """

    def __init__(self, nodes: Sequence[Hashable], edges: Iterable,
                 in_cap: Mapping | None = None, out_cap: Mapping | None = None,
                 origin: Mapping | None = None):
        self.nodes = tuple(nodes)
        if len(set(self.nodes)) != len(self.nodes):
            raise InvalidInputError("duplicate node ids")
        es = []
        for e in edges:
            es.append(e if isinstance(e, Edge) else Edge(*e))
        self.edges = tuple(es)
        self._by_id = {}
        for e in self.edges:
            if e.id in self._by_id:
                raise InvalidInputError(f"duplicate edge id {e.id!r}")
            self._by_id[e.id] = e
        self.in_cap = dict(in_cap or {})
        self.out_cap = dict(out_cap or {})
        self.origin = dict(origin) if origin else {v: v for v in self.nodes}
        self._din = {v: [] for v in self.nodes}
        self._dout = {v: [] for v in self.nodes}
        for e in self.edges:
            if e.head in self._din:
                self._din[e.head].append(e.id)
            if e.tail in self._dout:
                self._dout[e.tail].append(e.id)

    def edge(self, eid) -> Edge:
        return self._by_id[eid]

    def has_edge(self, eid) -> bool:
        return eid in self._by_id

    def delta_in(self, v) -> tuple:
        return tuple(self._din[v])

    def delta_out(self, v) -> tuple:
        return tuple(self._dout[v])

    def delta(self, v, side: str) -> tuple:
        return self.delta_in(v) if side == "in" else self.delta_out(v)

    def oracle(self, v, side: str) -> SetFunction:
        """Capacity oracle of ``v`` on ``side`` (``"in"`` or ``"out"``)."""
        caps = self.in_cap if side == "in" else self.out_cap
        o = caps.get(v)
        return o if o is not None else Unbounded(self.delta(v, side))

    def max_degree(self) -> int:
        return max((max(len(self._din[v]), len(self._dout[v])) for v in self.nodes),
                   default=0)

    def with_caps(self, in_cap=None, out_cap=None) -> "PolyNet":
        """Copy with some node oracles replaced."""
        ic = dict(self.in_cap)
        oc = dict(self.out_cap)
        ic.update(in_cap or {})
        oc.update(out_cap or {})
        return PolyNet(self.nodes, self.edges, ic, oc, self.origin)

    def scaled(self, factor: float) -> "PolyNet":
        """Copy with every explicit oracle multiplied by ``factor``."""
        from .polymatroid import Scaled

        return PolyNet(self.nodes, self.edges,
                       {v: Scaled(o, factor) for v, o in self.in_cap.items()},
                       {v: Scaled(o, factor) for v, o in self.out_cap.items()},
                       self.origin)

    def __repr__(self):
        return f"PolyNet(|V|={len(self.nodes)}, |E|={len(self.edges)})"


# ---------------------------------------------------------------------------
# Traffic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Commodity:
    source: Hashable
    sink: Hashable
    demand: float = 1.0


@dataclass(frozen=True)
class TrafficPattern:
    """A list of source/sink commodities with the pattern that produced it.

    Use the class methods to construct one; ``kind`` is one of
    ``"unicast"``, ``"broadcast"``, ``"x"``, ``"group"``.
    """

    kind: str
    commodities: tuple
    sources: tuple = ()
    sinks: tuple = ()

    def __post_init__(self):
        for c in self.commodities:
            if c.source == c.sink:
                raise InvalidInputError(f"commodity with source = sink = {c.source!r}")
            if not c.demand > 0:
                raise InvalidInputError("demands must be positive")
        if not self.commodities:
            raise InvalidInputError("traffic pattern has no commodities")

    @property
    def k(self) -> int:
        return len(self.commodities)

    @property
    def demands(self) -> np.ndarray:
        return np.array([c.demand for c in self.commodities])

    @staticmethod
    def _build(kind, pairs, demands, sources=(), sinks=()):
        pairs = list(pairs)
        if demands is None:
            demands = [1.0] * len(pairs)
        if len(demands) != len(pairs):
            raise InvalidInputError("one demand per commodity required")
        return TrafficPattern(kind, tuple(Commodity(s, t, float(d))
                                          for (s, t), d in zip(pairs, demands)),
                              tuple(sources), tuple(sinks))

    @classmethod
    def unicast(cls, pairs, demands=None) -> "TrafficPattern":
        pairs = [tuple(p) for p in pairs]
        return cls._build("unicast", pairs, demands,
                          [s for s, _ in pairs], [t for _, t in pairs])

    @classmethod
    def broadcast(cls, source, sinks, demands=None) -> "TrafficPattern":
        return cls._build("broadcast", [(source, t) for t in sinks], demands,
                          [source], sinks)

    @classmethod
    def x_traffic(cls, sources, sinks, demands=None) -> "TrafficPattern":
        """Every source has a message for every sink."""
        if not sources or not sinks:
            raise InvalidInputError("X traffic needs at least one source and one sink")
        pairs = [(s, t) for s in sources for t in sinks]
        return cls._build("x", pairs, demands, sources, sinks)

    @classmethod
    def group(cls, nodes, demands=None) -> "TrafficPattern":
        """Every member of ``nodes`` has a message for every other member."""
        nodes = list(nodes)
        pairs = [(s, t) for s in nodes for t in nodes if s != t]
        return cls._build("group", pairs, demands, nodes, nodes)

    def check_endpoints(self, net: PolyNet):
        known = set(net.nodes)
        for c in self.commodities:
            for v in (c.source, c.sink):
                if v not in known:
                    raise InvalidInputError(f"traffic endpoint {v!r} is not a node")


# ---------------------------------------------------------------------------
# Reversal map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReversalMap:
    """Involution pairing each edge with its reverse partner."""

    pairs: Mapping = field(default_factory=dict)

    @classmethod
    def from_pairs(cls, pairs) -> "ReversalMap":
        m = {}
        for a, b in pairs:
            for x, y in ((a, b), (b, a)):
                if m.get(x, y) != y:
                    raise InvalidInputError(f"edge {x!r} paired twice")
                m[x] = y
        return cls(m)

    @classmethod
    def infer(cls, net: PolyNet) -> "ReversalMap":
        """Pair ``(u,v)`` with ``(v,u)``; only valid without parallel edges."""
        by_ends = {}
        for e in net.edges:
            if (e.tail, e.head) in by_ends:
                raise InvalidInputError("parallel edges: the reversal map must be given")
            by_ends[(e.tail, e.head)] = e.id
        pairs = []
        for (u, v), eid in by_ends.items():
            if (v, u) not in by_ends:
                raise InvalidInputError(f"edge {eid!r} has no reverse partner")
            pairs.append((eid, by_ends[(v, u)]))
        return cls.from_pairs(pairs)

    def __call__(self, eid):
        return self.pairs[eid]

    def check(self, net: PolyNet):
        for e in net.edges:
            if e.id not in self.pairs:
                raise InvalidInputError(f"edge {e.id!r} has no reverse partner")
            r = self.pairs[e.id]
            if not net.has_edge(r) or self.pairs.get(r) != e.id:
                raise InvalidInputError(f"reversal map is not an involution at {e.id!r}")
            re = net.edge(r)
            if (re.tail, re.head) != (e.head, e.tail):
                raise InvalidInputError(f"{r!r} does not reverse {e.id!r}")


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def validate(net: PolyNet, deep: bool = False, cap: int = EXHAUSTIVE_CAP) -> list[str]:
    """Structural (and optionally oracle-law) violations of ``net``.

    Returns an empty list when the network is well formed.  With ``deep``,
    every explicit oracle whose ground set fits within ``cap`` is checked for
    monotonicity and submodularity; larger ones are reported as skipped.
    """
    out = []
    known = set(net.nodes)
    for e in net.edges:
        for end in (e.tail, e.head):
            if end not in known:
                out.append(f"unknown node: edge {e.id!r} touches {end!r}")
        if e.tail == e.head:
            out.append(f"self loop: edge {e.id!r}")
    for side, caps in (("in", net.in_cap), ("out", net.out_cap)):
        for v, o in caps.items():
            if v not in known:
                out.append(f"unknown node: {side}Cap given for {v!r}")
                continue
            delta = set(net.delta(v, side))
            ground = set(o.ground)
            for eid in net.delta(v, side):
                if eid not in ground:
                    out.append(f"edge unhoused: {eid!r} missing from {side}Cap of {v!r}")
            for eid in o.ground:
                if eid not in delta:
                    out.append(f"ground mismatch: {eid!r} in {side}Cap of {v!r} "
                               f"is not an {side}-edge of it")
            if deep:
                if o.n > cap:
                    out.append(f"deep check skipped: {side}Cap of {v!r} has {o.n} elements")
                    continue
                if np.any(o.table < -TOL_EXACT):
                    out.append(f"negative value: {side}Cap of {v!r}")
                if not is_monotone(o, cap=cap):
                    out.append(f"not monotone: {side}Cap of {v!r}")
                if not is_submodular(o, cap=cap):
                    out.append(f"not submodular: {side}Cap of {v!r}")
    return out


def is_bidirected(net: PolyNet, tau: ReversalMap | None = None,
                  cap: int = EXHAUSTIVE_CAP, tol: float = TOL_EXACT) -> bool:
    """Check ``inCap_v(E) == outCap_v(tau(E))`` for every node and ``E``.

    ``tau`` defaults to :meth:`ReversalMap.infer`.  Raises
    :class:`SizeCapError` if a node's in-degree exceeds ``cap``.
    """
    if tau is None:
        if not net.edges:
            return True
        try:
            tau = ReversalMap.infer(net)
        except InvalidInputError:
            return False
    tau.check(net)
    for v in net.nodes:
        din = net.delta_in(v)
        if set(tau(e) for e in din) != set(net.delta_out(v)):
            return False
        if len(din) > cap:
            raise SizeCapError(len(din), cap, f"node {v!r}")
        fin, fout = net.oracle(v, "in"), net.oracle(v, "out")
        for mask in range(1, 1 << len(din)):
            sub = [din[i] for i in range(len(din)) if mask >> i & 1]
            a, b = fin(sub), fout(tau(e) for e in sub)
            if math.isinf(a) or math.isinf(b):
                if a != b:
                    return False
            elif abs(a - b) > tol:
                return False
    return True


def extend_unbounded(oracle: SetFunction | None, new_ids) -> SetFunction | None:
    """Add unconstrained ground elements to an oracle (``None`` stays ``None``)."""
    if oracle is None:
        return None
    return DirectSum([oracle, Unbounded(list(new_ids))])


def add_super_source_sink(net: PolyNet, traffic: TrafficPattern,
                          source_name="S*", sink_name="T*"):
    """Reduce X traffic to one commodity between a super source and sink.

    Returns the augmented network and the unicast pattern ``S -> T``.  New
    edges are unconstrained; existing node oracles keep their values and are
    padded with unconstrained elements for the new edges.
    """
    if traffic.kind != "x":
        raise InvalidInputError("super source/sink reduction expects X traffic")
    if not traffic.sources or not traffic.sinks:
        raise InvalidInputError("X traffic needs sources and sinks")
    for name in (source_name, sink_name):
        if name in set(net.nodes):
            raise InvalidInputError(f"node id {name!r} already exists")
    new_edges = [Edge(edge_id(source_name, s), source_name, s) for s in traffic.sources]
    new_edges += [Edge(edge_id(t, sink_name), t, sink_name) for t in traffic.sinks]
    for e in new_edges:
        if net.has_edge(e.id):
            raise InvalidInputError(f"edge id {e.id!r} already exists")
    in_cap = dict(net.in_cap)
    out_cap = dict(net.out_cap)
    for e in new_edges:
        if e.head in in_cap:
            in_cap[e.head] = extend_unbounded(in_cap[e.head], [e.id])
        if e.tail in out_cap:
            out_cap[e.tail] = extend_unbounded(out_cap[e.tail], [e.id])
    origin = dict(net.origin)
    origin[source_name] = source_name
    origin[sink_name] = sink_name
    aug = PolyNet(net.nodes + (source_name, sink_name), net.edges + tuple(new_edges),
                  in_cap, out_cap, origin)
    return aug, TrafficPattern.unicast([(source_name, sink_name)])


def _intra_edges(vertices):
    return [Edge(edge_id(a, b), a, b) for a, b in itertools.permutations(vertices, 2)]


def split_by_color(edges, coloring: Mapping, nodes: Sequence | None = None) -> PolyNet:
    """Split each node into one vertex per incident color.

    Parameters
    ----------
    edges : sequence of ``(id, tail, head)``
        The wireless graph.
    coloring : mapping
        Edge id to color.  Every edge must be colored.
    nodes : sequence, optional
        Node order (and isolated nodes); defaults to first appearance.

    Returns
    -------
    PolyNet
        Vertices ``f"{v}@{c}"`` with channel edges attached to the matching
        vertex and unconstrained edges in both directions between every pair
        of vertices of one node.  All oracles are left unconstrained; callers
        fill them in with :meth:`PolyNet.with_caps`.
    """
    edges = [e if isinstance(e, Edge) else Edge(*e) for e in edges]
    order = list(nodes) if nodes is not None else []
    colors = {}
    for e in edges:
        if e.id not in coloring:
            raise InvalidInputError(f"edge {e.id!r} has no color")
        for v in (e.tail, e.head):
            if v not in order:
                order.append(v)
            cs = colors.setdefault(v, [])
            if coloring[e.id] not in cs:
                cs.append(coloring[e.id])
    verts, origin, intra = [], {}, []
    for v in order:
        vs = [f"{v}@{c}" for c in colors.get(v, [])] or [v]
        verts.extend(vs)
        origin.update({x: v for x in vs})
        intra.extend(_intra_edges(vs))
    chan = [Edge(e.id, f"{e.tail}@{coloring[e.id]}", f"{e.head}@{coloring[e.id]}")
            for e in edges]
    return PolyNet(verts, chan + intra, origin=origin)


def antenna_name(node, k: int, count: int) -> str:
    return str(node) if count == 1 else f"{node}#{k}"


def expand_antennas(antennas: Mapping, links: Iterable = ()) -> PolyNet:
    """One vertex per antenna, co-located antennas joined by free links.

    Parameters
    ----------
    antennas : mapping
        Original node to antenna count (at least 1).
    links : iterable of ``(id, (node, k), (node, k))``
        Channel edges between antennas.

    Returns
    -------
    PolyNet
        Antenna vertices ``f"{node}#{k}"`` (the bare node name when the node
        has one antenna), with ``origin`` mapping each back to its node.
    """
    verts, origin, intra = [], {}, []
    for v, cnt in antennas.items():
        if int(cnt) < 1:
            raise InvalidInputError(f"node {v!r} needs at least one antenna")
        vs = [antenna_name(v, k, int(cnt)) for k in range(int(cnt))]
        verts.extend(vs)
        origin.update({x: v for x in vs})
        intra.extend(_intra_edges(vs))
    chan = []
    for eid, (u, i), (w, j) in links:
        for node, k in ((u, i), (w, j)):
            if node not in antennas or not 0 <= k < int(antennas[node]):
                raise InvalidInputError(f"antenna ({node!r}, {k}) does not exist")
        chan.append(Edge(eid, antenna_name(u, i, int(antennas[u])),
                         antenna_name(w, j, int(antennas[w]))))
    return PolyNet(verts, chan + intra, origin=origin)


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

def traffic_to_record(t: TrafficPattern) -> dict:
    rec = {"kind": t.kind}
    if t.kind == "unicast":
        rec["pairs"] = [[c.source, c.sink] for c in t.commodities]
    elif t.kind == "broadcast":
        rec["source"] = t.sources[0]
        rec["sinks"] = list(t.sinks)
    elif t.kind == "x":
        rec["sources"] = list(t.sources)
        rec["sinks"] = list(t.sinks)
    else:
        rec["nodes"] = list(t.sources)
    rec["demands"] = [c.demand for c in t.commodities]
    return rec


def traffic_from_record(rec: Mapping) -> TrafficPattern:
    try:
        kind = rec["kind"]
        d = rec.get("demands")
        if kind == "unicast":
            return TrafficPattern.unicast(rec["pairs"], d)
        if kind == "broadcast":
            return TrafficPattern.broadcast(rec["source"], rec["sinks"], d)
        if kind == "x":
            return TrafficPattern.x_traffic(rec["sources"], rec["sinks"], d)
        if kind == "group":
            return TrafficPattern.group(rec["nodes"], d)
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed traffic record: missing {exc}") from exc
    raise InvalidInputError(f"unknown traffic kind {kind!r}")


def net_to_record(net: PolyNet, traffic: TrafficPattern | None = None,
                  tau: ReversalMap | None = None) -> dict:
    rec = {
        "schemaVersion": 1,
        "nodes": list(net.nodes),
        "edges": [{"id": e.id, "tail": e.tail, "head": e.head} for e in net.edges],
        "inCap": {str(v): o.to_record() for v, o in net.in_cap.items()},
        "outCap": {str(v): o.to_record() for v, o in net.out_cap.items()},
    }
    if any(net.origin.get(v, v) != v for v in net.nodes):
        rec["origin"] = {str(v): net.origin[v] for v in net.nodes}
    if tau is not None:
        seen, pairs = set(), []
        for e in net.edges:
            if e.id in seen:
                continue
            r = tau(e.id)
            seen.update((e.id, r))
            pairs.append([e.id, r])
        rec["tau"] = pairs
    if traffic is not None:
        rec["traffic"] = traffic_to_record(traffic)
    return rec


def net_from_record(rec: Mapping):
    """Parse a network record; returns ``(net, traffic or None, tau or None)``."""
    if not isinstance(rec, Mapping):
        raise InvalidInputError("network record must be a JSON object")
    if rec.get("schemaVersion", 1) != 1:
        raise InvalidInputError(f"unsupported schemaVersion {rec.get('schemaVersion')!r}")
    try:
        nodes = rec["nodes"]
        edges = [Edge(e["id"], e["tail"], e["head"]) for e in rec["edges"]]
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"network record missing field {exc}") from exc

    def caps(key):
        out = {}
        for v, r in (rec.get(key) or {}).items():
            try:
                out[v] = oracle_from_record(r)
            except InvalidInputError as exc:
                raise InvalidInputError(f"{key}[{v!r}]: {exc}") from exc
        return out

    net = PolyNet(nodes, edges, caps("inCap"), caps("outCap"), rec.get("origin"))
    traffic = traffic_from_record(rec["traffic"]) if rec.get("traffic") else None
    tau = ReversalMap.from_pairs(rec["tau"]) if rec.get("tau") else None
    return net, traffic, tau
