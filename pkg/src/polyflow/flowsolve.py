"""Multicommodity flow over polymatroidal networks by linear programming.

The LP has one variable per (edge, commodity), one rate variable per
commodity and a concurrency variable.  Every finite part of every node
oracle contributes one capacity row per non-empty subset of its ground set,
so the LP is exact for the polymatroidal flow model.  Nodes whose degree
exceeds ``degree_cap`` can instead be handled by lazy separation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import InvalidInputError, SizeCapError, SolverError
from .netmodel import Edge, PolyNet, TrafficPattern, edge_id
from .polymatroid import TOL_LP, UniformCap, membership, _bits

__all__ = [
    "LPStats", "LPResult", "FlowSolution", "FeasibilityResult", "FlowProblem",
    "highs_solver", "max_concurrent_flow", "max_weighted_sum", "feasible",
    "check_flow", "layered_network", "symmetric_layered_flow",
    "LayeredFlowResult", "DEGREE_CAP",
]

DEGREE_CAP = 12


@dataclass(frozen=True)
class LPStats:
    constraints: int
    variables: int
    solve_time: float
    status: str  # optimal | infeasible | unbounded | cap-exceeded
    rounds: int = 1


@dataclass(frozen=True)
class LPResult:
    """What a pluggable solver hands back (minimisation convention)."""

    status: str
    x: np.ndarray | None
    fun: float
    dual_fun: float
    ineq_duals: np.ndarray | None


def highs_solver(c, A_ub, b_ub, A_eq, b_eq, bounds) -> LPResult:
    """Default backend: scipy's HiGHS wrapper.

    Solves ``min c.x`` subject to ``A_ub x <= b_ub``, ``A_eq x == b_eq`` and
    per-variable ``bounds``, returning primal, dual objective and the
    (non-positive) marginals of the inequality rows.
    """
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs")
    if res.status == 2:
        return LPResult("infeasible", None, math.nan, math.nan, None)
    if res.status == 3:
        return LPResult("unbounded", None, -math.inf, -math.inf, None)
    if res.status != 0:
        raise SolverError(f"HiGHS failed: {res.message}")
    dual = 0.0
    if b_ub is not None and len(b_ub):
        dual += float(b_ub @ res.ineqlin.marginals)
    if b_eq is not None and len(b_eq):
        dual += float(b_eq @ res.eqlin.marginals)
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=float)
    fin = np.isfinite(hi)
    dual += float(hi[fin] @ res.upper.marginals[fin])
    dual += float(lo @ res.lower.marginals)
    return LPResult("optimal", res.x, float(res.fun), dual,
                    np.asarray(res.ineqlin.marginals) if b_ub is not None else None)


@dataclass(frozen=True)
class FlowSolution:
    """Optimal routing.

    Attributes
    ----------
    flows : dict
        ``(edge id, commodity index) -> value`` for values above 1e-12.
    rates : numpy.ndarray
        Per-commodity rates.
    lam : float
        Concurrency factor (``nan`` for weighted-sum solves).
    objective, dual_value : float
        Primal and dual objective of the LP; equal up to solver accuracy.
    """

    flows: dict
    rates: np.ndarray
    lam: float
    objective: float
    dual_value: float
    stats: LPStats

    def edge_load(self, eid) -> float:
        return sum(v for (e, _), v in self.flows.items() if e == eid)

    def loads(self) -> dict:
        out = {}
        for (e, _), v in self.flows.items():
            out[e] = out.get(e, 0.0) + v
        return out

    @property
    def duality_gap(self) -> float:
        if math.isinf(self.objective):
            return 0.0
        return abs(self.objective - self.dual_value)


@dataclass(frozen=True)
class CapacityRow:
    node: object
    side: str
    subset: frozenset
    bound: float


@dataclass(frozen=True)
class FeasibilityResult:
    """Verdict of :func:`feasible`; truthy iff the rates are routable.

    On failure ``lam < 1`` is the largest routable multiple of the rate
    vector and ``certificate`` lists the capacity rows with non-zero dual
    multipliers.  Summing those rows with the given weights bounds the
    routable multiple by ``lam``.
    """

    feasible: bool
    lam: float
    solution: FlowSolution | None
    certificate: tuple = ()

    def __bool__(self):
        return self.feasible


class FlowProblem:
    """Reusable LP for one network and traffic pattern.

    The capacity rows and conservation equations are built once; each call
    to :meth:`concurrent`, :meth:`weighted` or :meth:`feasible` only changes
    the objective and rate bounds.
    """

    def __init__(self, net: PolyNet, traffic: TrafficPattern,
                 degree_cap: int = DEGREE_CAP, lazy: bool = False,
                 solver: Callable = highs_solver):
        traffic.check_endpoints(net)
        self.net = net
        self.traffic = traffic
        self.degree_cap = degree_cap
        self.lazy = lazy
        self.solver = solver
        self.k = traffic.k
        self.m = len(net.edges)
        self._eidx = {e.id: j for j, e in enumerate(net.edges)}
        self.nvar = self.m * self.k + self.k + 1
        self._build_conservation()
        self._rows: list[CapacityRow] = []
        self._row_keys = set()
        self._lazy_parts = []
        self._build_capacity()

    # variable layout: f[e, i] at e * k + i, then r_i, then lambda
    def _f(self, j, i):
        return j * self.k + i

    def _r(self, i):
        return self.m * self.k + i

    @property
    def _lam(self):
        return self.nvar - 1

    def _build_conservation(self):
        rows, cols, vals = [], [], []
        r = 0
        for i, c in enumerate(self.traffic.commodities):
            for v in self.net.nodes:
                if v == c.sink:
                    continue
                for eid in self.net.delta_out(v):
                    rows.append(r); cols.append(self._f(self._eidx[eid], i)); vals.append(1.0)
                for eid in self.net.delta_in(v):
                    rows.append(r); cols.append(self._f(self._eidx[eid], i)); vals.append(-1.0)
                if v == c.source:
                    rows.append(r); cols.append(self._r(i)); vals.append(-1.0)
                r += 1
        self._n_cons = r
        self._cons = (rows, cols, vals)

    def _add_row(self, v, side, subset, bound):
        key = (v, side, subset)
        if key in self._row_keys:
            return False
        self._row_keys.add(key)
        self._rows.append(CapacityRow(v, side, subset, bound))
        return True

    def _build_capacity(self):
        for v in self.net.nodes:
            for side in ("in", "out"):
                for part in self.net.oracle(v, side).parts():
                    if part.family == "Unbounded":
                        continue
                    if part.n > self.degree_cap:
                        if not self.lazy:
                            raise SizeCapError(part.n, self.degree_cap,
                                               f"{side}Cap of node {v!r}")
                        self._lazy_parts.append((v, side, part))
                        full = part.value_of_mask((1 << part.n) - 1)
                        if math.isfinite(full):
                            self._add_row(v, side, frozenset(part.ground), full)
                        continue
                    tab = part.table
                    for mask in range(1, 1 << part.n):
                        if math.isfinite(tab[mask]):
                            sub = frozenset(part.ground[i] for i in _bits(mask))
                            self._add_row(v, side, sub, float(tab[mask]))

    def _matrices(self):
        rows, cols, vals = [], [], []
        for r, row in enumerate(self._rows):
            for eid in row.subset:
                j = self._eidx[eid]
                for i in range(self.k):
                    rows.append(r); cols.append(self._f(j, i)); vals.append(1.0)
        A_ub = sp.csr_array((vals, (rows, cols)), shape=(len(self._rows), self.nvar))
        b_ub = np.array([row.bound for row in self._rows])
        return A_ub, b_ub

    def _solve(self, c, extra_eq, bounds):
        """Solve with current rows, adding lazily separated rows as needed."""
        rounds = 0
        t0 = time.perf_counter()
        while True:
            rounds += 1
            A_ub, b_ub = self._matrices()
            rr, cc, vv = (list(a) for a in self._cons)
            b_eq = [0.0] * self._n_cons
            for coeffs, rhs in extra_eq:
                for col, val in coeffs:
                    rr.append(len(b_eq)); cc.append(col); vv.append(val)
                b_eq.append(rhs)
            A_eq = sp.csr_array((vv, (rr, cc)), shape=(len(b_eq), self.nvar))
            res = self.solver(c, A_ub if len(b_ub) else None, b_ub if len(b_ub) else None,
                              A_eq, np.array(b_eq), bounds)
            self._last = res
            if res.status != "optimal" or not self._lazy_parts:
                break
            if not self._separate(res.x):
                break
        stats = LPStats(len(self._rows) + len(b_eq), self.nvar,
                        time.perf_counter() - t0, res.status, rounds)
        return res, stats

    def _separate(self, x):
        loads = self._loads(x)
        added = False
        for v, side, part in self._lazy_parts:
            load = np.array([loads.get(e, 0.0) for e in part.ground])
            mr = membership(load, part, tol=1e-9)
            if not mr.member:
                mask = 0
                for e in mr.witness:
                    mask |= 1 << part.ground.index(e)
                added |= self._add_row(v, side, frozenset(mr.witness),
                                       part.value_of_mask(mask))
        return added

    def _loads(self, x):
        out = {}
        for j, e in enumerate(self.net.edges):
            out[e.id] = float(sum(x[self._f(j, i)] for i in range(self.k)))
        return out

    def _solution(self, res, stats, lam, sign=-1.0):
        if res.status == "unbounded":
            return FlowSolution({}, np.full(self.k, math.inf), math.inf, math.inf,
                                math.inf, stats)
        if res.status != "optimal":
            raise SolverError(f"LP {res.status}", stats)
        x = res.x
        flows = {}
        for j, e in enumerate(self.net.edges):
            for i in range(self.k):
                val = float(x[self._f(j, i)])
                if val > 1e-12:
                    flows[(e.id, i)] = val
        rates = np.array([max(float(x[self._r(i)]), 0.0) for i in range(self.k)])
        return FlowSolution(flows, rates, lam(x), sign * res.fun, sign * res.dual_fun,
                            stats)

    # -- public solves ------------------------------------------------------
    def concurrent(self, demands=None) -> FlowSolution:
        """Maximise ``lam`` with ``rate_i = lam * demand_i``."""
        d = self.traffic.demands if demands is None else np.asarray(demands, float)
        if len(d) != self.k or np.any(d < 0):
            raise InvalidInputError("one non-negative demand per commodity required")
        c = np.zeros(self.nvar)
        c[self._lam] = -1.0
        eq = [([(self._r(i), 1.0), (self._lam, -float(d[i]))], 0.0) for i in range(self.k)]
        bounds = [(0, None)] * self.nvar
        res, stats = self._solve(c, eq, bounds)
        return self._solution(res, stats, lambda x: float(x[self._lam]))

    def weighted(self, weights) -> FlowSolution:
        """Maximise ``sum_i w_i * rate_i``."""
        w = np.asarray(weights, dtype=float)
        if len(w) != self.k:
            raise InvalidInputError("one weight per commodity required")
        c = np.zeros(self.nvar)
        for i in range(self.k):
            c[self._r(i)] = -w[i]
        bounds = [(0, None)] * (self.nvar - 1) + [(0, 0)]
        # Commodities with zero weight are pinned to zero rate, so their flow
        # cannot take capacity away from the objective for no reason.
        for i in range(self.k):
            if w[i] <= 0:
                bounds[self._r(i)] = (0, 0)
        res, stats = self._solve(c, [], bounds)
        return self._solution(res, stats, lambda x: math.nan)

    def support(self, weights) -> float:
        """Support function of the flow region in direction ``weights >= 0``."""
        w = np.asarray(weights, dtype=float)
        if not np.any(w > 0):
            return 0.0
        return self.weighted(w).objective

    def feasible(self, rates, tol: float = 1e-7) -> FeasibilityResult:
        r = np.asarray(rates, dtype=float)
        if len(r) != self.k or np.any(r < 0):
            raise InvalidInputError("one non-negative rate per commodity required")
        if not np.any(r > 0):
            return FeasibilityResult(True, math.inf, None)
        sol = self.concurrent(r)
        if sol.lam >= 1.0 - tol:
            return FeasibilityResult(True, sol.lam, sol)
        duals = self._last.ineq_duals
        if duals is None:
            duals = np.zeros(len(self._rows))
        cert = tuple((row, float(-y)) for row, y in zip(self._rows, duals) if abs(y) > 1e-12)
        return FeasibilityResult(False, sol.lam, sol, cert)


def max_concurrent_flow(net, traffic, degree_cap=DEGREE_CAP, lazy=False,
                        solver=highs_solver) -> FlowSolution:
    """Largest ``lam`` such that ``lam * demands`` is routable."""
    return FlowProblem(net, traffic, degree_cap, lazy, solver).concurrent()


def max_weighted_sum(net, traffic, weights, degree_cap=DEGREE_CAP, lazy=False,
                     solver=highs_solver) -> FlowSolution:
    """Maximise the weighted sum of commodity rates."""
    return FlowProblem(net, traffic, degree_cap, lazy, solver).weighted(weights)


def feasible(net, traffic, rates, degree_cap=DEGREE_CAP, lazy=False,
             solver=highs_solver, tol=1e-7) -> FeasibilityResult:
    """Is the rate tuple routable?  See :class:`FeasibilityResult`."""
    return FlowProblem(net, traffic, degree_cap, lazy, solver).feasible(rates, tol)


def check_flow(net: PolyNet, traffic: TrafficPattern, sol: FlowSolution,
               tol: float = TOL_LP, cap: int = 16) -> list[str]:
    """Recheck conservation and capacity of a solution from scratch."""
    out = []
    for (eid, i), val in sol.flows.items():
        if val < -tol:
            out.append(f"negative flow on {eid!r} for commodity {i}")
    for i, c in enumerate(traffic.commodities):
        for v in net.nodes:
            fin = sum(sol.flows.get((e, i), 0.0) for e in net.delta_in(v))
            fout = sum(sol.flows.get((e, i), 0.0) for e in net.delta_out(v))
            want = sol.rates[i] if v == c.source else -sol.rates[i] if v == c.sink else 0.0
            if abs(fout - fin - want) > tol:
                out.append(f"conservation at {v!r} for commodity {i}: "
                           f"{fout - fin:.9g} != {want:.9g}")
    loads = sol.loads()
    for v in net.nodes:
        for side in ("in", "out"):
            o = net.oracle(v, side)
            x = np.array([loads.get(e, 0.0) for e in o.ground])
            mr = membership(np.maximum(x, 0), o, cap=cap, tol=tol)
            if not mr:
                out.append(f"capacity at {side}Cap of {v!r}: subset "
                           f"{sorted(map(str, mr.witness))} over by {mr.excess:.3g}")
    return out


# ---------------------------------------------------------------------------
# Layered networks
# ---------------------------------------------------------------------------

def _layer_names(k, sizes):
    layers = [[f"s{i + 1}" for i in range(k)]]
    for l, n in enumerate(sizes, start=1):
        layers.append([f"L{l}n{j + 1}" for j in range(n)])
    layers.append([f"t{i + 1}" for i in range(k)])
    return layers


def layered_network(k: int, sizes: Sequence[int], rate: float = 1.0):
    """Fully connected layered network with unit node constraints.

    Parameters
    ----------
    k : int
        Number of source/sink pairs (layers 0 and L+1).
    sizes : sequence of int
        Sizes ``n_1..n_L`` of the internal layers (may be empty).
    rate : float
        Common ``UniformCap`` value on every node's in- and out-edges.

    Returns
    -------
    (PolyNet, TrafficPattern)
        Sources ``s1..sk``, sinks ``t1..tk``, internal nodes ``L{l}n{j}``.
    """
    if k < 1 or any(n < 1 for n in sizes):
        raise InvalidInputError("layer sizes must be positive")
    layers = _layer_names(k, sizes)
    edges = []
    for a, b in zip(layers[:-1], layers[1:]):
        edges.extend(Edge(edge_id(u, v), u, v) for u in a for v in b)
    nodes = [v for layer in layers for v in layer]
    net = PolyNet(nodes, edges)
    in_cap, out_cap = {}, {}
    for v in nodes:
        if net.delta_in(v):
            in_cap[v] = UniformCap(rate, ground=net.delta_in(v))
        if net.delta_out(v):
            out_cap[v] = UniformCap(rate, ground=net.delta_out(v))
    net = PolyNet(nodes, edges, in_cap, out_cap)
    traffic = TrafficPattern.unicast([(f"s{i + 1}", f"t{i + 1}") for i in range(k)])
    return net, traffic


@dataclass(frozen=True)
class LayeredFlowResult:
    feasible: bool
    flows: dict
    net: PolyNet
    traffic: TrafficPattern
    violations: tuple = ()

    def __bool__(self):
        return self.feasible


def symmetric_layered_flow(sizes: Sequence[int], rates, tol: float = 1e-9
                           ) -> LayeredFlowResult:
    """Equal-split routing on a layered unit-constraint network.

    ``sizes`` lists every layer ``n_0..n_{L+1}``; the outer two must both
    equal ``k = len(rates)``.  Each node divides the flow of every commodity
    equally among its out-edges (the last hop sends commodity ``i`` only to
    sink ``i``).  The verdict is the closed form: ``sum(rates)`` at most
    ``min(n_l, n_{l+1})`` for every hop and every rate at most 1.
    """
    sizes = [int(n) for n in sizes]
    R = np.asarray(rates, dtype=float)
    k = len(R)
    if len(sizes) < 2 or sizes[0] != k or sizes[-1] != k:
        raise InvalidInputError("layer sizes must start and end with k = len(rates)")
    if np.any(R < 0):
        raise InvalidInputError("rates must be non-negative")
    inner = sizes[1:-1]
    net, traffic = layered_network(k, inner)
    layers = _layer_names(k, inner)
    flows = {}
    if not inner:
        for i in range(k):
            flows[(edge_id(layers[0][i], layers[1][i]), i)] = R[i]
    else:
        n1 = len(layers[1])
        for i in range(k):
            for v in layers[1]:
                flows[(edge_id(layers[0][i], v), i)] = R[i] / n1
        for a, b in zip(layers[1:-2], layers[2:-1]):
            for u in a:
                for v in b:
                    for i in range(k):
                        flows[(edge_id(u, v), i)] = R[i] / (len(a) * len(b))
        nL = len(layers[-2])
        for v in layers[-2]:
            for i in range(k):
                flows[(edge_id(v, layers[-1][i]), i)] = R[i] / nL
    flows = {key: float(v) for key, v in flows.items() if v > 0}
    bad = []
    for l in range(len(sizes) - 1):
        lim = min(sizes[l], sizes[l + 1])
        if R.sum() > lim + tol:
            bad.append(f"hop {l}: sum of rates {R.sum():.6g} > {lim}")
    for i in range(k):
        if R[i] > 1 + tol:
            bad.append(f"commodity {i}: rate {R[i]:.6g} > 1")
    return LayeredFlowResult(not bad, flows, net, traffic, tuple(bad))
