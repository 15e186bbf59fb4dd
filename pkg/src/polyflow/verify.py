"""Property suites behind ``polyflow verify``.

Each suite returns :class:`CheckRow` records.  A row summarises one check
over many instances: how many were run, how many failed, the worst
deviation seen and the tolerance it was judged against.  Rows contain no
timing, so two runs with the same seed serialize identically; timings are
returned separately.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from . import channels as ch
from .cutset import flow_cut_gap, layered_orbits, min_cut
from .flowsolve import FlowProblem, check_flow, layered_network, symmetric_layered_flow
from .fuzz import (
    FAMILIES, random_bidirected_net, random_broadcast_instance, random_group_instance,
    random_oracle, random_pairs, random_unicast_instance, random_x_instance,
)
from .netmodel import TrafficPattern, add_super_source_sink, is_bidirected
from .polymatroid import (
    CutErasure, PermutationPolytope, Unbounded, greedy_linear_opt, harmonic_gap_factor,
    harmonic_number, is_monotone, is_submodular, permutation_membership,
)

TOL_LP = 1e-6


@dataclass
class CheckRow:
    suite: str
    check: str
    instances: int
    failures: int
    worst: float
    tolerance: float
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.instances > 0

    def to_record(self):
        return {"suite": self.suite, "check": self.check, "instances": self.instances,
                "failures": self.failures, "worst": self.worst,
                "tolerance": self.tolerance, "passed": self.passed, "data": self.data}


def _row(suite, check, devs, tol, data=None, ok=None):
    """Build a row from per-instance deviations (or explicit pass flags)."""
    devs = [float(d) for d in devs]
    if ok is None:
        ok = [d <= tol for d in devs]
    return CheckRow(suite, check, len(ok), int(sum(not o for o in ok)),
                    max(devs, default=0.0), tol, data or {})


def _rng(seed, salt):
    return np.random.default_rng([seed, salt])


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def suite_laws(seed=0):
    """Exhaustive submodularity and monotonicity for every oracle family."""
    rng = _rng(seed, 1)
    rows = []
    for fam in FAMILIES:
        ok = []
        for _ in range(100):
            o = random_oracle(fam, int(rng.integers(1, 7)), rng)
            ok.append(is_submodular(o) and is_monotone(o))
        rows.append(_row("laws", f"family {fam}", [0.0] * len(ok), 0.0, ok=ok))
    ok = [is_submodular(Unbounded(range(n))) and is_monotone(Unbounded(range(n)))
          for n in range(1, 7)]
    rows.append(_row("laws", "family Unbounded", [0.0] * len(ok), 0.0, ok=ok))
    return rows


def _polymatroid_lp(oracle, w):
    n = oracle.n
    A, b = [], []
    for mask in range(1, 1 << n):
        A.append([(mask >> i) & 1 for i in range(n)])
        b.append(oracle.value_of_mask(mask))
    res = linprog(-np.asarray(w), A_ub=np.array(A, float), b_ub=np.array(b),
                  bounds=[(0, None)] * n, method="highs")
    return -res.fun


def suite_greedy(seed=0):
    """Greedy optimum against the LP over all subset constraints."""
    rng = _rng(seed, 2)
    devs = []
    fams = [f for f in FAMILIES if f != "TableLookup"] + ["TableLookup"]
    for t in range(120):
        o = random_oracle(fams[t % len(fams)], int(rng.integers(1, 7)), rng)
        w = rng.uniform(0, 3, o.n)
        devs.append(abs(greedy_linear_opt(o, w)[1] - _polymatroid_lp(o, w)))
    return [_row("greedy", "greedy = LP optimum", devs, 1e-7)]


def suite_erasure(seed=0):
    """Harmonic factor values and scaled containment of the cut region."""
    rows = [_row("erasure", "A(2, 0.5) = 4/3", [abs(harmonic_gap_factor(2, 0.5) - 4 / 3)],
                 1e-12)]
    devs = []
    for d in range(1, 65):
        for eps in np.round(np.arange(1, 100) * 0.01, 2):
            devs.append(max(0.0, harmonic_gap_factor(d, float(eps)) - harmonic_number(d)))
    rows.append(_row("erasure", "A <= H_d, d <= 64", devs, 1e-12))
    ratio = ch.erasure_regions(4, 0.999).no_fb_ratio
    rows.append(_row("erasure", "no-feedback ratio (4, 0.999) near 1/4",
                     [abs(ratio - 0.25) / 0.25], 0.005, {"ratio": ratio}))
    rng = _rng(seed, 3)
    for d in range(1, 7):
        loads = []
        for eps in (0.1, 0.3, 0.5, 0.7, 0.9):
            cut = CutErasure(eps, d)
            region = PermutationPolytope.erasure_feedback(d, eps)
            A = harmonic_gap_factor(d, eps)
            verts = [greedy_linear_opt(cut, rng.permutation(d) + 1.0)[0] for _ in range(8)]
            pts = list(verts)
            for _ in range(34):
                lam = rng.dirichlet(np.ones(len(verts)))
                pts.append(lam @ np.array(verts) * rng.uniform(0.5, 1.0))
            for x in pts:
                loads.append(0.0 if permutation_membership(x / A, region) else 1.0)
        rows.append(_row("erasure", f"harmonic containment d={d}", loads, 0.0))
    return rows


def suite_unicast(seed=0):
    """Single-commodity flow equals the enumerated minimum cut."""
    rng = _rng(seed, 4)
    devs, dual = [], []
    for _ in range(60):
        net, tr = random_unicast_instance(int(rng.integers(3, 9)), 4, seed=rng)
        sol = FlowProblem(net, tr).concurrent()
        devs.append(abs(sol.lam - min_cut(net, tr).value))
        dual.append(sol.duality_gap)
    return [_row("unicast", "max flow = min cut", devs, TOL_LP),
            _row("unicast", "LP duality", dual, TOL_LP)]


def suite_layered(seed=0):
    """Support equality on layered networks and the equal-split routing."""
    rng = _rng(seed, 5)
    devs, sym_ok, names = [], [], 0
    for k in (1, 2, 3):
        for L in range(0, 4):
            for sizes in itertools.product(range(1, 5), repeat=L):
                net, tr = layered_network(k, sizes)
                reg = min_cut(net, tr, orbits=layered_orbits(sizes))
                P = FlowProblem(net, tr)
                W = [np.array(w, float) for w in itertools.product([0, 1], repeat=k) if any(w)]
                W += list(rng.random((3, k)))
                devs.append(max(abs(P.support(w) - reg.support(w)) for w in W))
                lam = P.concurrent(np.ones(k)).lam
                full = [k] + list(sizes) + [k]
                for R in (np.full(k, lam), np.full(k, lam * 1.01), rng.random(k) * lam * 1.5):
                    s = symmetric_layered_flow(full, R)
                    ok = bool(s) == bool(P.feasible(R))
                    if s:
                        ok &= not check_flow(net, tr, _as_solution(s, R), tol=1e-7)
                    sym_ok.append(ok)
                names += 1
    return [_row("layered", "flow support = cut support", devs, TOL_LP,
                 {"instances": names}),
            _row("layered", "equal-split routing agrees with LP",
                 [0.0] * len(sym_ok), 0.0, ok=sym_ok)]


def _as_solution(sym, R):
    from .flowsolve import FlowSolution
    return FlowSolution(dict(sym.flows), np.asarray(R, float), 1.0, float(np.sum(R)),
                        float(np.sum(R)), None)


def suite_directed(seed=0):
    """Broadcast support equality, X sum-rate equality, group half bound."""
    rng = _rng(seed, 6)
    bc, xs, grp, ratios = [], [], [], []
    for _ in range(30):
        net, tr = random_broadcast_instance(int(rng.integers(4, 9)),
                                            int(rng.integers(2, 4)), seed=rng)
        P, reg = FlowProblem(net, tr), min_cut(net, tr)
        W = [np.eye(tr.k)[i] for i in range(tr.k)] + [np.ones(tr.k)] + list(rng.random((5, tr.k)))
        bc.append(max(abs(P.support(w) - reg.support(w)) for w in W))
    for _ in range(30):
        net, tr = random_x_instance(int(rng.integers(4, 9)), 2, 2, seed=rng)
        flow_sum = FlowProblem(net, tr).support(np.ones(tr.k))
        aug, uni = add_super_source_sink(net, tr)
        xs.append(abs(flow_sum - min_cut(aug, uni).value))
    for _ in range(30):
        net, tr = random_group_instance(int(rng.integers(4, 8)), int(rng.integers(2, 4)),
                                        seed=rng)
        f = FlowProblem(net, tr).support(np.ones(tr.k))
        c = min_cut(net, tr).support(np.ones(tr.k))
        grp.append(max(0.0, 0.5 * c - f))
        ratios.append(f / c if c > 0 else 1.0)
    return [_row("directed", "broadcast support equality", bc, TOL_LP),
            _row("directed", "X sum-rate = super source min cut", xs, TOL_LP),
            _row("directed", "group sum-rate >= half the cut", grp, TOL_LP,
                 {"minRatio": min(ratios)})]


def suite_gap(seed=0, instances=30):
    """Flow-cut gap on bidirected networks with up to four commodities."""
    rng = _rng(seed, 7)
    gaps, ok, devs = [], [], []
    for t in range(instances):
        k = 1 + t % 4
        net, tau = random_bidirected_net(int(rng.integers(4, 8)), 4, seed=rng)
        if not is_bidirected(net, tau):
            ok.append(False)
            continue
        tr = TrafficPattern.unicast(random_pairs(net.nodes, k, rng))
        g = flow_cut_gap(net, tr, n_random=100, seed=seed).gap
        gaps.append({"k": k, "gap": g})
        hi = 1 + math.log(k) + 1.0
        ok.append(1 - 1e-6 <= g <= hi)
        devs.append(max(0.0, g - hi, 1 - 1e-6 - g))
    return [_row("gap", "gap within envelope", devs, 0.0, {"gaps": gaps}, ok=ok)]


def suite_duality(seed=0):
    """Primal and dual objectives of the flow LP agree."""
    rng = _rng(seed, 8)
    dual = []
    for t in range(20):
        net, tau = random_bidirected_net(int(rng.integers(3, 8)), 4, seed=rng)
        tr = TrafficPattern.unicast(random_pairs(net.nodes, 1 + t % 3, rng))
        P = FlowProblem(net, tr)
        dual.append(P.concurrent().duality_gap)
        dual.append(P.weighted(rng.random(tr.k)).duality_gap)
    return [_row("duality", "|objective - dual| on fuzzed flows", dual, TOL_LP)]


def suite_gaussian(seed=0):
    """General-input cut at P inside the product cut at dP."""
    rng = _rng(seed, 9)
    ok = []
    for _ in range(1000):
        d = int(rng.integers(1, 7))
        rep = ch.power_scaling_check(rng.uniform(0.01, 3.0, d) * rng.choice([-1, 1], d),
                                     float(rng.uniform(0.1, 10)))
        ok.append(rep.holds)
    eq = []
    for d in range(1, 7):
        g = float(rng.uniform(0.1, 3))
        rep = ch.power_scaling_check([g] * d, 1.0)
        full = rep.rows[-1]
        eq.append(abs(full[1] - full[2]))
    return [_row("gaussian", "containment verdict", [0.0] * len(ok), 0.0, ok=ok),
            _row("gaussian", "equal gains saturate the bound", eq, 1e-9)]


def suite_matching(seed=0):
    """Degree polytope vertices equal matchings; DOF maps round-trip exactly."""
    ok = []
    for L in range(1, 4):
        for M in range(1, 4):
            V = {tuple(np.round(v, 9)) for v in ch.degree_polytope_vertices(L, M)}
            Mt = {tuple(m) for m in ch.matchings(L, M)}
            ok.append(V == Mt)
    rng = _rng(seed, 10)
    rt = []
    for _ in range(200):
        l = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        H = sum(Fraction(1, i) for i in range(1, l + 1))
        # a point of the achievable DOF region: d_j <= 1/H, sum d_j <= l/H
        raw = [Fraction(int(rng.integers(0, 20)), 20) for _ in range(m)]
        s = max(sum(raw), Fraction(1))
        d = [min(x / s * l, Fraction(1)) / H for x in raw]
        rt.append(ch.dof_zeta(ch.dof_psi(d, l), l) == d)
    return [_row("matching", "vertices = matchings up to 3x3", [0.0] * len(ok), 0.0, ok=ok),
            _row("matching", "zeta(psi(d)) = d exactly", [0.0] * len(rt), 0.0, ok=rt)]


def suite_delayed(seed=0):
    """Delayed-CSIT sum and per-user DOF values and the reported factor."""
    r2 = ch.delayed_csit_bc_dof(2, [1, 1])
    r3 = ch.delayed_csit_bc_dof(3, [1, 1, 1])
    per_user = r3.oracle([r3.oracle.ground[0]])
    rows = [_row("delayed", "l=2 sum bound 4/3", [abs(r2.sum_bound - 4 / 3)], 1e-12),
            _row("delayed", "l=3 per-user 6/11", [abs(per_user - 6 / 11)], 1e-12),
            _row("delayed", "l=3 sum 18/11", [abs(r3.sum_bound - 18 / 11)], 1e-12)]
    devs = []
    for l in range(1, 7):
        for m in itertools.product(range(1, 3), repeat=min(l, 3)):
            r = ch.delayed_csit_bc_dof(l, m)
            p = min(l, sum(m))
            g = r.cut_oracle.ground
            devs.append(abs(r.factor - harmonic_number(p)))
            devs.append(abs(r.cut_oracle(g) / r.oracle(g) - harmonic_number(p)))
    rows.append(_row("delayed", "factor = H_p", devs, 1e-12))
    return rows


def suite_channels(seed=0):
    """Reciprocal compilation is bidirected; fading constants are stable."""
    pm = ch.DiscreteSymmetric((1.0, -1.0), (0.5, 0.5))
    nets = {
        "gaussian pair": ch.WirelessNetwork((
            ch.GaussianMAC("mac", "v", ("u1", "u2"), (1.0, 0.5), 2.0),
            ch.GaussianBC("bc", "v", ("u1", "u2"), (1.0, 0.5), 2.0, color="mac")), reciprocal=True),
        "linear deterministic pair": ch.WirelessNetwork((
            ch.LinDetMAC("mac", "v", ("u1", "u2"), ([[1], [0]], [[0], [1]]), 2),
            ch.LinDetBC("bc", "v", ("u1", "u2"), ([[1, 0]], [[0, 1]]), 2, color="mac")),
            reciprocal=True),
        "fading X": ch.WirelessNetwork((ch.FadingX("x", ("a", "b"), ("c", "d"), power=1.0,
                                                   fading=pm),), reciprocal=True),
        "fading LD X": ch.WirelessNetwork((ch.FadingLdX("x", ("a", "b"), ("c",), q=3),),
                                          reciprocal=True),
        "erasure with feedback": ch.WirelessNetwork((ch.ErasureBCFB("e", "s", ("a", "b", "c"),
                                                                    0.3),), reciprocal=True),
    }
    ok = []
    for name, wn in nets.items():
        for mode in (("color", "snapshot") if name.startswith("fading") else ("color",)):
            c = ch.compile_network(wn, mode=mode)
            ok.append(is_bidirected(c.net, c.tau))
    ray = ch.RayleighUnitVariance()
    ests = [ray.a_monte_carlo(100_000, s) for s in range(seed, seed + 5)]
    spread = (max(ests) - min(ests)) / ray.a
    dev = max(abs(e - ray.a) / ray.a for e in ests)
    return [_row("channels", "reciprocal compile is bidirected", [0.0] * len(ok), 0.0, ok=ok),
            _row("channels", "Rayleigh a reproducible across seeds", [max(spread, dev)], 0.02,
                 {"a": ray.a})]


SUITES = {
    "laws": suite_laws,
    "greedy": suite_greedy,
    "erasure": suite_erasure,
    "unicast": suite_unicast,
    "layered": suite_layered,
    "directed": suite_directed,
    "gap": suite_gap,
    "duality": suite_duality,
    "gaussian": suite_gaussian,
    "matching": suite_matching,
    "delayed": suite_delayed,
    "channels": suite_channels,
}


@dataclass
class VerifyResult:
    seed: int
    rows: list
    timings: dict

    @property
    def failures(self) -> int:
        return sum(not r.passed for r in self.rows)

    def table(self) -> dict:
        """Timing-free result table (the part compared for determinism)."""
        return {"schemaVersion": 1, "seed": self.seed,
                "rows": [r.to_record() for r in self.rows]}


def run(selector: str = "all", seed: int = 0) -> VerifyResult:
    """Run one suite by name, or every suite for ``"all"``."""
    names = list(SUITES) if selector == "all" else [selector]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite {unknown[0]!r}; choose from {', '.join(SUITES)} or all")
    rows, timings = [], {}
    for n in names:
        t = time.perf_counter()
        rows.extend(SUITES[n](seed))
        timings[n] = time.perf_counter() - t
    return VerifyResult(seed, rows, timings)
