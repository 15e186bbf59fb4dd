"""Exact cut machinery for polymatroidal networks.

The cost of a set ``F`` of crossing edges is the minimum, over assignments of
each edge to its tail or its head, of the summed node-oracle values of the
groups so formed.  Edges interact only through a shared (node, side, oracle
part) group, so ``F`` splits into independent components that are minimised
separately.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidInputError, PolyflowError, SizeCapError
from .netmodel import PolyNet, TrafficPattern
from .polymatroid import TOL_LP

__all__ = [
    "ASSIGN_CAP", "VERTEX_CAP", "CutCertificate", "CutEvaluator", "cut_cost",
    "edge_set_cost", "CutRegionReport", "min_cut", "GapReport", "flow_cut_gap",
    "decomposition_check", "crossing_edges", "separated", "layered_orbits",
    "gap_directions",
]

ASSIGN_CAP = 20
VERTEX_CAP = 18


def crossing_edges(net: PolyNet, omega) -> tuple:
    """Edges leaving ``omega``, in network order."""
    om = set(omega)
    return tuple(e.id for e in net.edges if e.tail in om and e.head not in om)


def separated(traffic: TrafficPattern, omega) -> frozenset:
    """Indices of commodities with source in ``omega`` and sink outside."""
    om = set(omega)
    return frozenset(i for i, c in enumerate(traffic.commodities)
                     if c.source in om and c.sink not in om)


@dataclass(frozen=True)
class CutCertificate:
    """A vertex set, its crossing edges and a cheapest valid assignment.

    ``cost`` is ``inf`` when every assignment places some edge in an
    unconstrained group.  ``approximate`` marks a greedy assignment, whose
    cost is a valid bound but may exceed the true minimum.
    """

    omega: frozenset
    crossing: tuple
    assignment: Mapping
    cost: float
    separated: frozenset = frozenset()
    approximate: bool = False

    def recompute(self, net: PolyNet) -> float:
        return assignment_cost(net, self.assignment)

    def is_valid(self, net: PolyNet) -> bool:
        if set(self.assignment) != set(self.crossing):
            return False
        return all(self.assignment[e] in (net.edge(e).tail, net.edge(e).head)
                   for e in self.crossing)


def assignment_cost(net: PolyNet, assignment: Mapping) -> float:
    """Sum of node-oracle values for the groups an assignment induces."""
    groups = {}
    for eid, v in assignment.items():
        e = net.edge(eid)
        if v == e.tail:
            groups.setdefault((v, "out"), []).append(eid)
        elif v == e.head:
            groups.setdefault((v, "in"), []).append(eid)
        else:
            raise InvalidInputError(f"edge {eid!r} assigned to non-endpoint {v!r}")
    return float(sum(net.oracle(v, side)(ids) for (v, side), ids in groups.items()))


class CutEvaluator:
    """Precomputed group structure of a network for repeated cut costs.

    Parameters
    ----------
    net : PolyNet
    assign_cap : int
        Largest component (in edges) minimised by full enumeration.
    fallback : bool
        Use the greedy assignment for larger components instead of raising.
    """

    def __init__(self, net: PolyNet, assign_cap: int = ASSIGN_CAP, fallback: bool = False):
        self.net = net
        self.assign_cap = assign_cap
        self.fallback = fallback
        # edge -> (group key, position in part) for its tail-out and head-in side
        self._side = {}
        self._parts = {}
        for v in net.nodes:
            for side in ("in", "out"):
                for pi, part in enumerate(net.oracle(v, side).parts()):
                    key = (v, side, pi)
                    self._parts[key] = part
                    for pos, eid in enumerate(part.ground):
                        self._side[(eid, side)] = (key, pos)
        self._cache = {}

    def _group(self, eid, side):
        try:
            return self._side[(eid, side)]
        except KeyError:
            raise InvalidInputError(
                f"edge {eid!r} is not housed by the {side}Cap of its endpoint") from None

    def cost(self, edges: Iterable, omega=frozenset(), sep=frozenset()) -> CutCertificate:
        edges = tuple(edges)
        total, assignment, approx = 0.0, {}, False
        for comp in self._components(edges):
            c, a, ap = self._component_cost(comp)
            total += c
            assignment.update(a)
            approx |= ap
        return CutCertificate(frozenset(omega), edges, assignment, float(total),
                              frozenset(sep), approx)

    def _components(self, edges):
        parent = {}

        def find(x):
            while parent.setdefault(x, x) != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for eid in edges:
            a = find(self._group(eid, "out")[0])
            b = find(self._group(eid, "in")[0])
            if a != b:
                parent[a] = b
        comps = {}
        for eid in edges:
            comps.setdefault(find(self._group(eid, "out")[0]), []).append(eid)
        return [tuple(c) for c in comps.values()]

    def _component_cost(self, comp):
        hit = self._cache.get(comp)
        if hit is not None:
            return hit
        out_keys = {self._group(e, "out")[0] for e in comp}
        in_keys = {self._group(e, "in")[0] for e in comp}
        keys = out_keys | in_keys
        flat = all(self._parts[k].family in ("UniformCap", "Unbounded") for k in keys)
        if flat and min(len(out_keys), len(in_keys)) <= self.assign_cap:
            res = self._cover_cost(comp, sorted(out_keys, key=repr),
                                   sorted(in_keys, key=repr))
        elif len(comp) <= self.assign_cap:
            res = self._enum_cost(comp)
        elif self.fallback:
            res = self._greedy_cost(comp)
        else:
            raise SizeCapError(len(comp), self.assign_cap, "crossing-edge component")
        self._cache[comp] = res
        return res

    def _rate(self, key):
        part = self._parts[key]
        return math.inf if part.family == "Unbounded" else part.rate

    def _cover_cost(self, comp, out_keys, in_keys):
        """Groups cost a flat rate when non-empty: a weighted vertex cover."""
        tails = {k: i for i, k in enumerate(out_keys)}
        heads = {k: i for i, k in enumerate(in_keys)}
        pairs = [(tails[self._group(e, "out")[0]], heads[self._group(e, "in")[0]], e)
                 for e in comp]
        rt = [self._rate(k) for k in out_keys]
        rh = [self._rate(k) for k in in_keys]
        swap = len(out_keys) > len(in_keys)
        if swap:
            pairs = [(h, t, e) for t, h, e in pairs]
            rt, rh = rh, rt
        best, best_mask = math.inf, 0
        for mask in range(1 << len(rt)):
            c = sum(rt[i] for i in range(len(rt)) if mask >> i & 1)
            if c >= best:
                continue
            need = {h for t, h, _ in pairs if not mask >> t & 1}
            c += sum(rh[h] for h in need)
            if c < best:
                best, best_mask = c, mask
        assignment = {}
        for t, h, e in pairs:
            ed = self.net.edge(e)
            first = ed.head if swap else ed.tail
            other = ed.tail if swap else ed.head
            assignment[e] = first if best_mask >> t & 1 else other
        if math.isinf(best):
            assignment = {e: self.net.edge(e).tail for e in comp}
        return best, assignment, False

    def _local_table(self, key, comp_bits):
        """Values of a group's part over subsets of the component edges it holds."""
        part = self._parts[key]
        members = [(bit, pos) for bit, pos in comp_bits]
        tab = np.empty(1 << len(members))
        for m in range(1 << len(members)):
            ids = [part.ground[members[j][1]] for j in range(len(members)) if m >> j & 1]
            tab[m] = part(ids) if ids else 0.0
        return [b for b, _ in members], tab

    def _enum_cost(self, comp):
        n = len(comp)
        masks = np.arange(1 << n, dtype=np.int64)  # bit j set: edge j goes to head
        members = {}
        for j, e in enumerate(comp):
            for side in ("out", "in"):
                key, pos = self._group(e, side)
                members.setdefault((key, side), []).append((j, pos))
        total = np.zeros(1 << n)
        with np.errstate(invalid="ignore"):
            for (key, side), mem in members.items():
                bits, tab = self._local_table(key, mem)
                local = np.zeros(1 << n, dtype=np.int64)
                for li, b in enumerate(bits):
                    on = (masks >> b) & 1
                    if side == "out":
                        on = 1 - on
                    local |= on << li
                total = total + tab[local]
        best = int(np.argmin(total))
        assignment = {e: (self.net.edge(e).head if best >> j & 1 else self.net.edge(e).tail)
                      for j, e in enumerate(comp)}
        return float(total[best]), assignment, False

    def _greedy_cost(self, comp):
        """Sequential marginal-cost assignment in edge-id order (approximate)."""
        assignment = {}
        for e in sorted(comp, key=repr):
            ed = self.net.edge(e)
            best = None
            for end in (ed.tail, ed.head):
                trial = dict(assignment)
                trial[e] = end
                c = assignment_cost(self.net, trial)
                if best is None or c < best[0]:
                    best = (c, end)
            assignment[e] = best[1]
        return assignment_cost(self.net, assignment), assignment, True

    def cut(self, omega, traffic: TrafficPattern | None = None) -> CutCertificate:
        om = frozenset(omega)
        unknown = om - set(self.net.nodes)
        if unknown:
            raise InvalidInputError(f"omega has unknown nodes {sorted(map(str, unknown))}")
        sep = separated(traffic, om) if traffic is not None else frozenset()
        return self.cost(crossing_edges(self.net, om), om, sep)


def cut_cost(net: PolyNet, omega, traffic: TrafficPattern | None = None,
             assign_cap: int = ASSIGN_CAP, fallback: bool = False) -> CutCertificate:
    """Cheapest valid assignment of the edges leaving ``omega``."""
    return CutEvaluator(net, assign_cap, fallback).cut(omega, traffic)


def edge_set_cost(net: PolyNet, edges, assign_cap: int = ASSIGN_CAP,
                  fallback: bool = False) -> CutCertificate:
    """Assignment-minimised cost of an arbitrary edge set."""
    return CutEvaluator(net, assign_cap, fallback).cost(edges)


# ---------------------------------------------------------------------------
# Cut regions
# ---------------------------------------------------------------------------

@dataclass
class CutRegionReport:
    """Cut-set region: one bound per realisable set of separated commodities.

    ``bounds`` maps a frozenset of commodity indices to the cheapest cut
    separating exactly that set.  Unbounded cuts are left out.
    """

    k: int
    bounds: dict = field(default_factory=dict)
    cuts_examined: int = 0
    approximate: bool = False

    def offer(self, cert: CutCertificate):
        if not cert.separated or math.isinf(cert.cost):
            return
        cur = self.bounds.get(cert.separated)
        if cur is None or cert.cost < cur.cost:
            self.bounds[cert.separated] = cert
        self.approximate |= cert.approximate

    @property
    def value(self) -> float:
        """Smallest bound over all separated sets (the min-cut for unicast)."""
        return min((c.cost for c in self.bounds.values()), default=math.inf)

    def matrix(self):
        keys = sorted(self.bounds, key=lambda s: (len(s), sorted(s)))
        A = np.zeros((len(keys), self.k))
        for r, s in enumerate(keys):
            A[r, list(s)] = 1.0
        b = np.array([self.bounds[s].cost for s in keys])
        return A, b, keys

    def support(self, w) -> float:
        w = np.asarray(w, dtype=float)
        if not np.any(w > 0):
            return 0.0
        A, b, _ = self.matrix()
        res = linprog(-w, A_ub=A if len(b) else None, b_ub=b if len(b) else None,
                      bounds=[(0, None)] * self.k, method="highs")
        if res.status == 3:
            return math.inf
        if res.status != 0:
            raise PolyflowError(f"cut-region LP failed: {res.message}")
        return float(-res.fun)

    def contains(self, rates, tol: float = TOL_LP) -> bool:
        r = np.asarray(rates, dtype=float)
        A, b, _ = self.matrix()
        return bool(np.all(r >= -tol) and np.all(A @ r <= b + tol))

    def vertices(self, tol: float = 1e-9) -> np.ndarray:
        """Vertices of the region by brute force over tight constraint sets."""
        A, b, _ = self.matrix()
        k = self.k
        M = np.vstack([A, -np.eye(k)])
        rhs = np.concatenate([b, np.zeros(k)])
        out = []
        for rows in itertools.combinations(range(len(rhs)), k):
            sub = M[list(rows)]
            if abs(np.linalg.det(sub)) < 1e-12:
                continue
            x = np.linalg.solve(sub, rhs[list(rows)])
            if np.all(M @ x <= rhs + tol):
                if not any(np.allclose(x, y, atol=1e-9) for y in out):
                    out.append(x)
        return np.array(out).reshape(-1, k)

    def to_record(self) -> dict:
        rows = []
        for s in sorted(self.bounds, key=lambda s: (len(s), sorted(s))):
            c = self.bounds[s]
            rows.append({"separated": sorted(s), "bound": c.cost,
                         "omega": sorted(map(str, c.omega)),
                         "assignment": {str(e): str(v) for e, v in c.assignment.items()},
                         "approximate": c.approximate})
        return {"k": self.k, "cutsExamined": self.cuts_examined,
                "approximate": self.approximate, "bounds": rows}


def _omegas(net: PolyNet, traffic: TrafficPattern, orbits):
    """Vertex sets to examine; with ``orbits`` one representative per count."""
    terminals = {c.source for c in traffic.commodities} | {c.sink for c in traffic.commodities}
    if orbits is None:
        free = [v for v in net.nodes if v not in terminals]
        groups = [[v] for v in free]
    else:
        seen = set()
        groups = []
        for g in orbits:
            g = list(g)
            if seen & set(g) or set(g) & terminals:
                raise InvalidInputError("orbits must be disjoint and avoid terminals")
            seen |= set(g)
            groups.append(g)
        groups += [[v] for v in net.nodes if v not in seen and v not in terminals]
    term = [v for v in net.nodes if v in terminals]
    for tmask in range(1, 1 << len(term)):
        base = [term[i] for i in range(len(term)) if tmask >> i & 1]
        if not separated(traffic, base):
            continue
        for counts in itertools.product(*[range(len(g) + 1) for g in groups]):
            om = list(base)
            for g, c in zip(groups, counts):
                om.extend(g[:c])
            yield frozenset(om)


def min_cut(net: PolyNet, traffic: TrafficPattern, vertex_cap: int = VERTEX_CAP,
            assign_cap: int = ASSIGN_CAP, fallback: bool = False,
            orbits: Sequence[Sequence[Hashable]] | None = None) -> CutRegionReport:
    """Enumerate vertex sets separating some commodity and keep the cheapest.

    Parameters
    ----------
    orbits : sequence of vertex groups, optional
        Groups of non-terminal vertices that the caller asserts are
        interchangeable under an automorphism of ``net``.  Only the number of
        vertices taken from each group is enumerated, which is exact for
        such groups.
    """
    if len(net.nodes) > vertex_cap:
        raise SizeCapError(len(net.nodes), vertex_cap, "min-cut vertex enumeration")
    traffic.check_endpoints(net)
    ev = CutEvaluator(net, assign_cap, fallback)
    rep = CutRegionReport(traffic.k)
    for om in _omegas(net, traffic, orbits):
        rep.cuts_examined += 1
        rep.offer(ev.cut(om, traffic))
    return rep


def layered_orbits(sizes: Sequence[int]) -> list[list[str]]:
    """Internal layers of :func:`flowsolve.layered_network` as vertex orbits."""
    return [[f"L{l}n{j + 1}" for j in range(n)] for l, n in enumerate(sizes, start=1)]


# ---------------------------------------------------------------------------
# Flow-cut gap
# ---------------------------------------------------------------------------

def gap_directions(k: int, n_random: int = 100, seed: int = 0) -> np.ndarray:
    """Unit vectors, the all-ones vector and seeded random non-negative rows."""
    rng = np.random.default_rng(seed)
    return np.vstack([np.eye(k), np.ones((1, k)), rng.random((n_random, k))])


@dataclass
class GapReport:
    gap: float
    directions: np.ndarray
    flow_support: np.ndarray
    cut_support: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            r = self.cut_support / self.flow_support
        r[(self.cut_support <= 1e-12) & (self.flow_support <= 1e-12)] = 1.0
        return r

    def to_record(self) -> dict:
        return {"gap": self.gap, "directions": [
            {"w": list(map(float, w)), "flow": float(f), "cut": float(c), "ratio": float(r)}
            for w, f, c, r in zip(self.directions, self.flow_support,
                                  self.cut_support, self.ratios)]}


def flow_cut_gap(net: PolyNet, traffic: TrafficPattern, n_random: int = 100,
                 seed: int = 0, problem=None, region: CutRegionReport | None = None,
                 tol: float = TOL_LP, **cut_kw) -> GapReport:
    """Estimate the flow-cut gap by comparing support functions.

    Every direction in :func:`gap_directions` is evaluated on both regions;
    the gap estimate is the largest ratio ``h_cut(w) / h_flow(w)``.  A ratio
    below ``1 - tol`` means the flow exceeded a cut bound, which cannot
    happen for correct inputs, and raises.
    """
    from .flowsolve import FlowProblem

    if problem is None:
        problem = FlowProblem(net, traffic)
    if region is None:
        region = min_cut(net, traffic, **cut_kw)
    W = gap_directions(traffic.k, n_random, seed)
    hf = np.array([problem.support(w) for w in W])
    hc = np.array([region.support(w) for w in W])
    rep = GapReport(0.0, W, hf, hc)
    r = rep.ratios
    if np.any(r < 1 - tol):
        i = int(np.argmin(r))
        raise PolyflowError(f"flow {hf[i]:.9g} exceeds cut {hc[i]:.9g} in direction {W[i]}")
    rep.gap = float(np.max(r))
    return rep


def decomposition_check(net: PolyNet, partition: Mapping, omega,
                        tol: float = TOL_LP, assign_cap: int = ASSIGN_CAP):
    """Compare the whole cut cost with the sum of per-channel cut costs.

    ``partition`` maps edge ids to a channel label; every crossing edge must
    be labelled.  Returns ``(lhs, rhs, holds)`` with ``lhs = nu(F)`` and
    ``rhs`` the sum over channels of the cost of that channel's crossing
    edges alone.
    """
    ev = CutEvaluator(net, assign_cap)
    F = crossing_edges(net, omega)
    missing = [e for e in F if e not in partition]
    if missing:
        raise InvalidInputError(f"partition does not cover crossing edges {missing}")
    lhs = ev.cost(F).cost
    by = {}
    for e in F:
        by.setdefault(partition[e], []).append(e)
    rhs = float(sum(ev.cost(es).cost for es in by.values()))
    return lhs, rhs, bool(lhs <= rhs + tol)
