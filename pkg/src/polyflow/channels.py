"""Local channel rate regions and the compiler from wireless networks.

Region builders return oracles or explicit polytopes for each canonical
channel.  :func:`compile_network` assembles channel descriptions into a
:class:`~polyflow.netmodel.PolyNet` whose node constraints are those
regions, and records how far each channel's polymatroidal cut sits from its
wireless cut (a power factor and a rate factor).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial.laguerre import laggauss

from .errors import InvalidInputError
from .netmodel import (
    Edge, PolyNet, ReversalMap, edge_id, expand_antennas,
)
from .polymatroid import (
    TOL_EXACT, CutErasure, DirectSum, GaussianMacLog, Halfspace, Modular,
    PermutationPolytope, RankGF, RatePolytope, Scaled, SetFunction,
    Truncation, Unbounded, UniformCap, harmonic_gap_factor, harmonic_number,
    is_prime, polymatroid_polytope,
)

__all__ = [
    "FadingModel", "DiscreteSymmetric", "RayleighUnitVariance", "fading_from_record",
    "gaussian_mac_region", "power_scaling_check", "PowerScalingReport",
    "erasure_regions", "ErasureRegions", "mac_erasure_region",
    "x_channel_region", "x_channel_dof_region", "ld_x_region", "XRegion",
    "ld_region", "delayed_csit_bc_dof", "DelayedCsitRegion",
    "matchings", "degree_polytope_vertices", "dof_psi", "dof_zeta",
    "GaussianMAC", "GaussianBC", "LinDetMAC", "LinDetBC", "ErasureBCFB",
    "FadingX", "FixedXdof", "FadingLdX", "DelayedCsitBC", "channel_from_record",
    "channel_to_record", "WirelessNetwork", "wireless_from_record",
    "CompiledChannel", "CompiledNetwork", "compile_network",
    "wireless_cut_factor_report", "CutFactorReport",
]


# ---------------------------------------------------------------------------
# Fading models
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = laggauss(64)


class FadingModel:
    """Distribution of a fading coefficient ``h``.

    ``a = exp(-E ln|h|^2)``, ``b = a / 2`` and the ergodic capacity
    ``C(P) = E[0.5 * log2(1 + |h|^2 P)]`` are exposed as properties/methods.
    """

    kind = "abstract"

    @property
    def a(self) -> float:
        raise NotImplementedError

    @property
    def b(self) -> float:
        return self.a / 2.0

    def capacity(self, P: float, log_base: float = 2.0) -> float:
        raise NotImplementedError

    def sample_gain2(self, rng, n):
        raise NotImplementedError

    def a_monte_carlo(self, n: int = 200_000, seed: int = 0) -> float:
        """Sampling estimate of ``a`` (a cross-check for the exact value)."""
        rng = np.random.default_rng(seed)
        g2 = self.sample_gain2(rng, n)
        return float(np.exp(-np.mean(np.log(g2))))

    def to_record(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class DiscreteSymmetric(FadingModel):
    """Finitely supported ``h`` with ``Pr{h = x} = Pr{h = -x}``."""

    support: tuple
    probs: tuple

    kind = "discrete"

    def __post_init__(self):
        s = tuple(float(x) for x in self.support)
        p = tuple(float(x) for x in self.probs)
        if len(s) != len(p) or not s:
            raise InvalidInputError("support and probs must be non-empty and aligned")
        if any(x < 0 for x in p) or abs(sum(p) - 1.0) > 1e-9:
            raise InvalidInputError("probabilities must be non-negative and sum to 1")
        mass = {}
        for x, q in zip(s, p):
            mass[x] = mass.get(x, 0.0) + q
        for x, q in mass.items():
            if abs(q - mass.get(-x, 0.0)) > 1e-12:
                raise InvalidInputError(f"distribution not symmetric at {x}")
        if mass.get(0.0, 0.0) > 0:
            raise InvalidInputError("h = 0 with positive probability makes a infinite")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "probs", p)

    @property
    def a(self) -> float:
        s, p = np.array(self.support), np.array(self.probs)
        return float(np.exp(-np.sum(p * np.log(s ** 2))))

    def capacity(self, P, log_base=2.0):
        s, p = np.array(self.support), np.array(self.probs)
        return float(np.sum(p * 0.5 * np.log1p(s ** 2 * P)) / math.log(log_base))

    def sample_gain2(self, rng, n):
        return rng.choice(np.array(self.support), size=n, p=np.array(self.probs)) ** 2

    def to_record(self):
        return {"kind": "discrete", "support": list(self.support), "probs": list(self.probs)}


@dataclass(frozen=True)
class RayleighUnitVariance(FadingModel):
    """Circularly symmetric complex Gaussian ``h``; ``|h|^2`` is Exp(1).

    ``E ln|h|^2 = -gamma`` (Euler's constant), so ``a = exp(gamma)``.
    ``C(P)`` uses 64-point Gauss-Laguerre quadrature.
    """

    kind = "rayleigh"

    @property
    def a(self) -> float:
        return float(np.exp(np.euler_gamma))

    def capacity(self, P, log_base=2.0):
        return float(np.sum(_GL_WEIGHTS * 0.5 * np.log1p(P * _GL_NODES))
                     / math.log(log_base))

    def sample_gain2(self, rng, n):
        return rng.exponential(1.0, size=n)

    def to_record(self):
        return {"kind": "rayleigh"}


def fading_from_record(rec) -> FadingModel:
    kind = (rec or {}).get("kind", "rayleigh")
    if kind == "rayleigh":
        return RayleighUnitVariance()
    if kind == "discrete":
        return DiscreteSymmetric(tuple(rec["support"]), tuple(rec["probs"]))
    raise InvalidInputError(f"unknown fading model {kind!r}")


# ---------------------------------------------------------------------------
# Gaussian MAC / BC
# ---------------------------------------------------------------------------

def gaussian_mac_region(gains, P, ground=None) -> GaussianMacLog:
    """Achievable MAC region (also used for the dual BC) as an oracle."""
    return GaussianMacLog(gains, P, ground=ground)


@dataclass(frozen=True)
class PowerScalingReport:
    rows: tuple  # (subset, general bound at P, product bound at d*P)
    holds: bool
    tight: bool


def power_scaling_check(gains, P, tol: float = TOL_EXACT) -> PowerScalingReport:
    """Compare the general-input MAC cut at ``P`` with the product cut at ``d*P``.

    For every non-empty subset ``S`` the general bound is
    ``log2(1 + (sum |h_i|)^2 P)`` and the product bound is
    ``log2(1 + sum |h_i|^2 d P)``.  ``holds`` is true when the first never
    exceeds the second; ``tight`` when they coincide on every subset.
    """
    h = np.abs(np.asarray(gains, dtype=float))
    d = len(h)
    if d == 0:
        raise InvalidInputError("at least one gain required")
    rows, holds, tight = [], True, True
    for r in range(1, d + 1):
        for S in itertools.combinations(range(d), r):
            g = math.log2(1 + h[list(S)].sum() ** 2 * P)
            p = math.log2(1 + (h[list(S)] ** 2).sum() * d * P)
            rows.append((S, g, p))
            holds &= g <= p + tol
            tight &= abs(g - p) <= tol
    return PowerScalingReport(tuple(rows), bool(holds), bool(tight))


# ---------------------------------------------------------------------------
# Erasure broadcast
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ErasureRegions:
    no_fb: RatePolytope
    fb: PermutationPolytope
    cut: CutErasure
    no_fb_ratio: float
    harmonic_factor: float


def erasure_regions(d: int, eps: float) -> ErasureRegions:
    """No-feedback, ACK-feedback and cut-set regions of a ``d``-user erasure BC."""
    if d < 1:
        raise InvalidInputError("d must be at least 1")
    if not 0.0 < eps < 1.0:
        raise InvalidInputError("eps must lie in (0,1)")
    no_fb = RatePolytope(d, (Halfspace(tuple([1.0] * d), 1.0 - eps, "sum"),))
    return ErasureRegions(no_fb, PermutationPolytope.erasure_feedback(d, eps),
                          CutErasure(eps, d), (1.0 - eps) / (1.0 - eps ** d),
                          harmonic_gap_factor(d, eps))


def mac_erasure_region(d: int, eps: float, ground=None) -> CutErasure:
    """Capacity region of the finite-field erasure MAC (same as the BC cut)."""
    return CutErasure(eps, d if ground is None else None, ground=ground)


# ---------------------------------------------------------------------------
# X channels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class XRegion:
    """Per-node row/column constraints of an X channel, each ``<= rate``."""

    rate: float
    edges: tuple
    out_cap: dict
    in_cap: dict
    comparison_bound: float | None = None

    def contains(self, x: Mapping, tol: float = TOL_EXACT) -> bool:
        for o in list(self.out_cap.values()) + list(self.in_cap.values()):
            if sum(x.get(e, 0.0) for e in o.ground) > self.rate + tol:
                return False
        return all(v >= -tol for v in x.values())


def _x_edges(E):
    E = [tuple(e) for e in E]
    if len(set(E)) != len(E):
        raise InvalidInputError("duplicate X-channel edge")
    srcs = {s for s, _ in E}
    if srcs & {t for _, t in E}:
        raise InvalidInputError("X-channel edge set must be bipartite")
    return E


def _x_region(E, rate, bound=None) -> XRegion:
    E = _x_edges(E)
    ids = [edge_id(s, t) for s, t in E]
    out_cap, in_cap = {}, {}
    for s in dict.fromkeys(s for s, _ in E):
        out_cap[s] = UniformCap(rate, ground=[edge_id(s, t) for s2, t in E if s2 == s])
    for t in dict.fromkeys(t for _, t in E):
        in_cap[t] = UniformCap(rate, ground=[edge_id(s, t) for s, t2 in E if t2 == t])
    return XRegion(rate, tuple(ids), out_cap, in_cap, bound)


def _max_degree(E):
    deg = {}
    for s, t in E:
        deg[s] = deg.get(s, 0) + 1
        deg[t] = deg.get(t, 0) + 1
    return max(deg.values(), default=0)


def x_channel_region(E, P: float, fading: FadingModel) -> XRegion:
    """Ergodic X channel: each row and column sum at most ``C(2P)/2``.

    ``comparison_bound`` is ``C(a d P)`` with ``d`` the largest node degree,
    the single-node cut value the achievable rate is compared against.
    """
    if P <= 0:
        raise InvalidInputError("power must be positive")
    E = _x_edges(E)
    r = 0.5 * fading.capacity(2 * P)
    return _x_region(E, r, fading.capacity(fading.a * _max_degree(E) * P))


def x_channel_dof_region(E) -> XRegion:
    """Fixed X channel DOF region: row and column sums at most 1/2."""
    return _x_region(E, 0.5, 1.0)


def ld_x_region(E, q: int) -> XRegion:
    """Fading linear-deterministic X channel: sums at most ``log2(q)/2``."""
    if not is_prime(int(q)):
        raise InvalidInputError("q must be prime")
    return _x_region(E, 0.5 * math.log2(q), math.log2(q))


def matchings(L: int, M: int) -> list[np.ndarray]:
    """Indicator vectors (row-major ``L x M``) of all matchings of ``K_{L,M}``."""
    out = []
    for r in range(min(L, M) + 1):
        for rows in itertools.combinations(range(L), r):
            for cols in itertools.permutations(range(M), r):
                x = np.zeros(L * M)
                for i, j in zip(rows, cols):
                    x[i * M + j] = 1.0
                out.append(x)
    return out


def degree_polytope_vertices(L: int, M: int, tol: float = 1e-9) -> list[np.ndarray]:
    """Vertices of ``{x >= 0, row sums <= 1, column sums <= 1}`` by brute force.

    Every choice of ``L*M`` linearly independent tight constraints is solved
    and kept when feasible.
    """
    n = L * M
    rows = [np.eye(n)[k] * -1 for k in range(n)]
    rhs = [0.0] * n
    for i in range(L):
        a = np.zeros(n); a[i * M:(i + 1) * M] = 1; rows.append(a); rhs.append(1.0)
    for j in range(M):
        a = np.zeros(n); a[j::M] = 1; rows.append(a); rhs.append(1.0)
    A, b = np.array(rows), np.array(rhs)
    verts = []
    for tight in itertools.combinations(range(len(b)), n):
        sub = A[list(tight)]
        if np.linalg.matrix_rank(sub) < n:
            continue
        x = np.linalg.solve(sub, b[list(tight)])
        if np.all(A @ x <= b + tol) and not any(np.allclose(x, v, atol=1e-9) for v in verts):
            verts.append(np.where(np.abs(x) < 1e-12, 0.0, x))
    return verts


def dof_psi(d: Sequence, l: int):
    """Map a DOF tuple to the ``l x m`` matching-polytope point ``H_l d_j / l``."""
    H = _harmonic_exact(l) if _is_exact(d) else harmonic_number(l)
    return [[H * dj / l for dj in d] for _ in range(l)]


def dof_zeta(x, l: int):
    """Map a matching-polytope point back to DOF: column sums over ``H_l``."""
    exact = _is_exact([v for row in x for v in row])
    H = _harmonic_exact(l) if exact else harmonic_number(l)
    m = len(x[0]) if x else 0
    return [sum(x[i][j] for i in range(len(x))) / H for j in range(m)]


def _is_exact(vals):
    return all(isinstance(v, (int, Fraction)) for v in vals)


def _harmonic_exact(l):
    return sum(Fraction(1, i) for i in range(1, l + 1))


# ---------------------------------------------------------------------------
# Linear deterministic and delayed CSIT
# ---------------------------------------------------------------------------

def ld_region(matrices, q: int, orientation: str = "rows", ground=None) -> RankGF:
    """Rank oracle of a linear-deterministic BC (``rows``) or MAC (``cols``)."""
    return RankGF(q, matrices, orientation, ground=ground)


@dataclass(frozen=True)
class DelayedCsitRegion:
    p: int
    factor: float
    achievable: RatePolytope
    cut: RatePolytope
    oracle: SetFunction
    cut_oracle: SetFunction

    @property
    def sum_bound(self) -> float:
        return self.p / self.factor


def delayed_csit_bc_dof(l: int, m: Sequence[int], ground=None) -> DelayedCsitRegion:
    """DOF regions of an ``l``-antenna BC with delayed CSIT.

    With ``p = min(l, sum m)`` and ``H_p`` the harmonic number, the cut
    region is ``{sum_A d_i <= min(sum_A m_i, l)}`` and the achievable region
    is the same polymatroid shrunk by ``H_p``.  For single-antenna receivers
    this is ``d_i <= 1/H_p`` and ``sum d_i <= p/H_p``.
    """
    m = [int(x) for x in m]
    if int(l) < 1 or not m or any(x < 1 for x in m):
        raise InvalidInputError("need l >= 1 and receiver antenna counts >= 1")
    l = int(l)
    p = min(l, sum(m))
    H = harmonic_number(p)
    cut_oracle = Truncation(Modular(m, ground=ground), float(l))
    ach = Scaled(cut_oracle, 1.0 / H)
    return DelayedCsitRegion(p, H, polymatroid_polytope(ach), polymatroid_polytope(cut_oracle),
                             ach, cut_oracle)


# ---------------------------------------------------------------------------
# Channel specifications
# ---------------------------------------------------------------------------

def _gains(g):
    g = tuple(abs(float(x)) for x in g)
    if not g or not all(math.isfinite(x) for x in g):
        raise InvalidInputError("gains must be finite and non-empty")
    return g


def _pos(P):
    P = float(P)
    if not P > 0:
        raise InvalidInputError("power must be positive")
    return P


@dataclass(frozen=True)
class GaussianMAC:
    id: str
    receiver: str
    transmitters: tuple
    gains: tuple
    power: float
    color: str | None = None
    kind = "GaussianMAC"

    def __post_init__(self):
        object.__setattr__(self, "transmitters", tuple(self.transmitters))
        object.__setattr__(self, "gains", _gains(self.gains))
        object.__setattr__(self, "power", _pos(self.power))
        if len(self.gains) != len(self.transmitters):
            raise InvalidInputError(f"{self.id}: one gain per transmitter")


@dataclass(frozen=True)
class GaussianBC:
    id: str
    transmitter: str
    receivers: tuple
    gains: tuple
    power: float
    color: str | None = None
    kind = "GaussianBC"

    def __post_init__(self):
        object.__setattr__(self, "receivers", tuple(self.receivers))
        object.__setattr__(self, "gains", _gains(self.gains))
        object.__setattr__(self, "power", _pos(self.power))
        if len(self.gains) != len(self.receivers):
            raise InvalidInputError(f"{self.id}: one gain per receiver")


def _mats(ms, q):
    if not is_prime(int(q)):
        raise InvalidInputError("q must be prime")
    return tuple(np.atleast_2d(np.array(M, dtype=np.int64)) % int(q) for M in ms)


@dataclass(frozen=True)
class LinDetMAC:
    id: str
    receiver: str
    transmitters: tuple
    matrices: tuple
    q: int
    color: str | None = None
    kind = "LinDetMAC"

    def __post_init__(self):
        object.__setattr__(self, "transmitters", tuple(self.transmitters))
        object.__setattr__(self, "matrices", _mats(self.matrices, self.q))
        if len(self.matrices) != len(self.transmitters):
            raise InvalidInputError(f"{self.id}: one matrix per transmitter")
        RankGF(self.q, self.matrices, "cols")


@dataclass(frozen=True)
class LinDetBC:
    id: str
    transmitter: str
    receivers: tuple
    matrices: tuple
    q: int
    color: str | None = None
    kind = "LinDetBC"

    def __post_init__(self):
        object.__setattr__(self, "receivers", tuple(self.receivers))
        object.__setattr__(self, "matrices", _mats(self.matrices, self.q))
        if len(self.matrices) != len(self.receivers):
            raise InvalidInputError(f"{self.id}: one matrix per receiver")
        RankGF(self.q, self.matrices, "rows")


@dataclass(frozen=True)
class ErasureBCFB:
    id: str
    transmitter: str
    receivers: tuple
    eps: float
    feedback: bool = True
    color: str | None = None
    kind = "ErasureBCFB"

    def __post_init__(self):
        object.__setattr__(self, "receivers", tuple(self.receivers))
        if not 0.0 < float(self.eps) < 1.0:
            raise InvalidInputError(f"{self.id}: eps must lie in (0,1)")
        if not self.receivers:
            raise InvalidInputError(f"{self.id}: at least one receiver")


@dataclass(frozen=True)
class _XBase:
    id: str
    sources: tuple
    sinks: tuple
    edges: tuple = ()
    color: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "sinks", tuple(self.sinks))
        E = tuple(tuple(e) for e in self.edges) or tuple(
            (s, t) for s in self.sources for t in self.sinks)
        for s, t in E:
            if s not in self.sources or t not in self.sinks:
                raise InvalidInputError(f"{self.id}: edge ({s}, {t}) leaves the bipartition")
        object.__setattr__(self, "edges", tuple(_x_edges(E)))

    @property
    def degree(self):
        return _max_degree(self.edges)


@dataclass(frozen=True)
class FadingX(_XBase):
    power: float = 1.0
    fading: FadingModel = field(default_factory=RayleighUnitVariance)
    kind = "FadingX"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "power", _pos(self.power))

    @property
    def rate(self):
        return 0.5 * self.fading.capacity(2 * self.power)


@dataclass(frozen=True)
class FixedXdof(_XBase):
    kind = "FixedXdof"
    rate = 0.5


@dataclass(frozen=True)
class FadingLdX(_XBase):
    q: int = 2
    kind = "FadingLdX"

    def __post_init__(self):
        super().__post_init__()
        if not is_prime(int(self.q)):
            raise InvalidInputError(f"{self.id}: q must be prime")

    @property
    def rate(self):
        return 0.5 * math.log2(self.q)


@dataclass(frozen=True)
class DelayedCsitBC:
    id: str
    transmitter: str
    antennas: int
    receivers: tuple
    receiver_antennas: tuple = ()
    color: str | None = None
    kind = "DelayedCsitBC"

    def __post_init__(self):
        object.__setattr__(self, "receivers", tuple(self.receivers))
        m = tuple(int(x) for x in self.receiver_antennas) or (1,) * len(self.receivers)
        if len(m) != len(self.receivers):
            raise InvalidInputError(f"{self.id}: one antenna count per receiver")
        object.__setattr__(self, "receiver_antennas", m)
        delayed_csit_bc_dof(self.antennas, m)


X_KINDS = ("FadingX", "FixedXdof", "FadingLdX")

_SPEC_TYPES = {c.kind: c for c in (GaussianMAC, GaussianBC, LinDetMAC, LinDetBC,
                                   ErasureBCFB, FadingX, FixedXdof, FadingLdX,
                                   DelayedCsitBC)}


def channel_from_record(rec: Mapping):
    """Build a channel spec from its JSON record (``kind`` selects the type)."""
    try:
        kind = rec["kind"]
        cls = _SPEC_TYPES[kind]
    except KeyError:
        raise InvalidInputError(f"unknown channel kind in {rec!r}") from None
    kw = {k: v for k, v in rec.items() if k != "kind"}
    if kind == "FadingX" and "fading" in kw:
        kw["fading"] = fading_from_record(kw["fading"])
    if "receiverAntennas" in kw:
        kw["receiver_antennas"] = kw.pop("receiverAntennas")
    try:
        return cls(**kw)
    except TypeError as exc:
        raise InvalidInputError(f"channel {rec.get('id')!r}: {exc}") from None


def channel_to_record(ch) -> dict:
    rec = {"kind": ch.kind}
    for k, v in ch.__dict__.items():
        if k == "fading":
            v = v.to_record()
        elif k == "matrices":
            v = [M.tolist() for M in v]
        elif k == "receiver_antennas":
            k = "receiverAntennas"
        if isinstance(v, tuple):
            v = [list(x) if isinstance(x, tuple) else x for x in v]
        rec[k] = v
    return rec


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WirelessNetwork:
    channels: tuple
    mode: str = "color"
    reciprocal: bool = False
    coloring: Mapping = field(default_factory=dict)
    antennas: Mapping = field(default_factory=dict)
    nodes: tuple = ()


def wireless_from_record(rec: Mapping) -> WirelessNetwork:
    if rec.get("schemaVersion", 1) != 1:
        raise InvalidInputError(f"unsupported schemaVersion {rec.get('schemaVersion')!r}")
    try:
        chans = tuple(channel_from_record(c) for c in rec["channels"])
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"wireless record missing {exc}") from None
    coloring = rec.get("coloring") or {}
    mode = rec.get("mode", "color")
    if coloring == "snapshot":
        mode, coloring = "snapshot", {}
    return WirelessNetwork(chans, mode, bool(rec.get("reciprocal", False)), dict(coloring),
                           dict(rec.get("antennas") or {}), tuple(rec.get("nodes") or ()))


@dataclass(frozen=True)
class Group:
    """One node constraint contributed by a channel."""

    vertex: str
    side: str
    edges: tuple
    oracle: SetFunction
    channel: str
    term: Callable  # (assigned edge ids, power divisor) -> wireless cut value
    power_scale: float
    rate_scale: float


@dataclass(frozen=True)
class CompiledChannel:
    id: str
    kind: str
    edges: tuple
    groups: tuple
    reciprocal: bool
    power_scale: float
    rate_scale: float

    def to_record(self):
        return {"id": self.id, "kind": self.kind, "edges": list(self.edges),
                "groups": [{"vertex": g.vertex, "side": g.side, "edges": list(g.edges)}
                           for g in self.groups],
                "reciprocal": self.reciprocal, "powerScale": self.power_scale,
                "rateScale": self.rate_scale}


@dataclass(frozen=True)
class CompiledNetwork:
    net: PolyNet
    channels: tuple
    tau: ReversalMap | None
    mode: str

    def groups(self):
        return [g for c in self.channels for g in c.groups]


class _Builder:
    def __init__(self, mode):
        self.mode = mode
        self.edges = {}
        self.groups = []

    def add_edge(self, tail, head):
        eid = edge_id(tail, head)
        if eid in self.edges:
            raise InvalidInputError(f"link {eid!r} defined twice")
        self.edges[eid] = Edge(eid, tail, head)
        return eid


def _color(ch, wn):
    return str(wn.coloring.get(ch.id, ch.color if ch.color is not None else ch.id))


def _pair_key_gauss(mac, bc):
    return (mac.receiver == bc.transmitter and
            set(mac.transmitters) == set(bc.receivers))


def _pairs(wn, colors):
    """Match each MAC with its reciprocal BC; returns (pairs, unpaired ids)."""
    macs = [c for c in wn.channels if c.kind in ("GaussianMAC", "LinDetMAC")]
    bcs = [c for c in wn.channels if c.kind in ("GaussianBC", "LinDetBC")]
    pairs, used = [], set()
    for m in macs:
        want = "GaussianBC" if m.kind == "GaussianMAC" else "LinDetBC"
        for b in bcs:
            if b.id in used or b.kind != want or colors[m.id] != colors[b.id]:
                continue
            if not _pair_key_gauss(m, b):
                continue
            if _reciprocal_params(m, b):
                pairs.append((m, b))
                used.add(b.id)
                break
    paired = {m.id for m, _ in pairs} | used
    unpaired = [c.id for c in macs + bcs if c.id not in paired]
    return pairs, unpaired


def _reciprocal_params(m, b, tol=TOL_EXACT):
    pos = {u: i for i, u in enumerate(b.receivers)}
    for i, u in enumerate(m.transmitters):
        j = pos[u]
        if m.kind == "GaussianMAC":
            if abs(m.gains[i] - b.gains[j]) > tol:
                return False
        else:
            if m.q != b.q or m.matrices[i].shape != b.matrices[j].T.shape or \
                    not np.array_equal(m.matrices[i], b.matrices[j].T):
                return False
    return True


def _loss(ch, snapshot_degree=None):
    k = ch.kind
    if k in ("GaussianMAC", "GaussianBC"):
        d = len(ch.transmitters if k == "GaussianMAC" else ch.receivers)
        return float(d), 1.0
    if k in ("LinDetMAC", "LinDetBC"):
        return 1.0, 1.0
    if k == "ErasureBCFB":
        return 1.0, harmonic_gap_factor(len(ch.receivers), ch.eps)
    if k == "FadingX":
        d = snapshot_degree or ch.degree
        return ch.fading.b * d ** 3, 2.0
    if k in ("FixedXdof", "FadingLdX"):
        return 1.0, 2.0
    if k == "DelayedCsitBC":
        return 1.0, harmonic_number(min(ch.antennas, sum(ch.receiver_antennas)))
    raise InvalidInputError(f"unknown channel kind {k!r}")


def _x_term(ch, degree):
    if ch.kind == "FadingX":
        a = ch.fading.a
        return lambda A, div: ch.fading.capacity(a * degree ** 3 * ch.power / div)
    if ch.kind == "FixedXdof":
        return lambda A, div: 1.0
    return lambda A, div: math.log2(ch.q)


def _compile_channel(ch, b: _Builder, V, reciprocal, partner=None):
    """Add one channel's links and groups; returns its CompiledChannel."""
    ps, rs = _loss(ch)
    groups, eids = [], []

    def grp(vertex, side, es, oracle, term):
        groups.append(Group(vertex, side, tuple(es), oracle, ch.id, term, ps, rs))

    k = ch.kind
    if k in ("GaussianMAC", "LinDetMAC"):
        es = [b.add_edge(V(u), V(ch.receiver)) for u in ch.transmitters]
        eids += es
        if k == "GaussianMAC":
            pos = dict(zip(es, ch.gains))
            o = GaussianMacLog(ch.gains, ch.power, ground=es)
            term = lambda A, div: math.log2(1 + sum(pos[e] for e in A) ** 2 * ch.power / div)
        else:
            o = RankGF(ch.q, ch.matrices, "cols", ground=es)
            term = lambda A, div, o=o: o(A)
        grp(V(ch.receiver), "in", es, o, term)
    elif k in ("GaussianBC", "LinDetBC"):
        es = [b.add_edge(V(ch.transmitter), V(u)) for u in ch.receivers]
        eids += es
        if k == "GaussianBC":
            pos = dict(zip(es, ch.gains))
            d = len(es)
            o = GaussianMacLog(ch.gains, ch.power, ground=es)
            term = lambda A, div: math.log2(1 + sum(pos[e] ** 2 for e in A) * d * ch.power / div)
        else:
            o = RankGF(ch.q, ch.matrices, "rows", ground=es)
            term = lambda A, div, o=o: o(A)
        grp(V(ch.transmitter), "out", es, o, term)
    elif k == "ErasureBCFB":
        d = len(ch.receivers)
        A = harmonic_gap_factor(d, ch.eps)
        term = lambda S, div: 1.0 - ch.eps ** len(S)
        es = [b.add_edge(V(ch.transmitter), V(u)) for u in ch.receivers]
        eids += es
        grp(V(ch.transmitter), "out", es, Scaled(CutErasure(ch.eps, ground=es), 1.0 / A), term)
        if reciprocal:
            fb = [b.add_edge(V(u), V(ch.transmitter)) for u in ch.receivers]
            eids += fb
            grp(V(ch.transmitter), "in", fb, Scaled(CutErasure(ch.eps, ground=fb), 1.0 / A), term)
    elif k in X_KINDS:
        term = _x_term(ch, ch.degree)
        directions = [False, True] if reciprocal else [False]
        for rev in directions:
            es_all = []
            by_tail, by_head = {}, {}
            for s, t in ch.edges:
                u, w = (t, s) if rev else (s, t)
                eid = b.add_edge(V(u), V(w))
                es_all.append(eid)
                by_tail.setdefault(V(u), []).append(eid)
                by_head.setdefault(V(w), []).append(eid)
            eids += es_all
            for v, es in by_tail.items():
                grp(v, "out", es, UniformCap(ch.rate, ground=es), term)
            for v, es in by_head.items():
                grp(v, "in", es, UniformCap(ch.rate, ground=es), term)
    elif k == "DelayedCsitBC":
        m = ch.receiver_antennas
        es = [b.add_edge(V(ch.transmitter), V(u)) for u in ch.receivers]
        eids += es
        mm = dict(zip(es, m))
        term = lambda S, div: float(min(sum(mm[e] for e in S), ch.antennas))
        grp(V(ch.transmitter), "out", es, delayed_csit_bc_dof(ch.antennas, m, ground=es).oracle,
            term)
        if reciprocal:
            rv = [b.add_edge(V(u), V(ch.transmitter)) for u in ch.receivers]
            eids += rv
            mr = dict(zip(rv, m))
            term_r = lambda S, div: float(min(sum(mr[e] for e in S), ch.antennas))
            grp(V(ch.transmitter), "in", rv,
                delayed_csit_bc_dof(ch.antennas, m, ground=rv).oracle, term_r)
    else:
        raise InvalidInputError(f"unknown channel kind {k!r}")
    b.groups.extend(groups)
    return CompiledChannel(ch.id, k, tuple(eids), tuple(groups), bool(reciprocal), ps, rs)


def _compile_snapshot(wn: WirelessNetwork, b: _Builder, V, reciprocal: bool):
    chans = wn.channels
    bad = [c.id for c in chans if c.kind not in X_KINDS]
    if bad:
        raise InvalidInputError(f"{wn.mode} mode supports X-family channels only: {bad}")
    sig = {(c.kind, round(c.rate, 12),
            c.fading.to_record().__repr__() if c.kind == "FadingX" else None,
            c.power if c.kind == "FadingX" else None) for c in chans}
    if len(sig) > 1:
        raise InvalidInputError(f"{wn.mode} mode needs identical channel parameters")
    links = []
    for c in chans:
        for s, t in c.edges:
            links.append((c, s, t))
            if reciprocal:
                links.append((c, t, s))
    degree = {}
    for _, s, t in links:
        degree[(s, "out")] = degree.get((s, "out"), 0) + 1
        degree[(t, "in")] = degree.get((t, "in"), 0) + 1
    dmax = max(degree.values(), default=1)
    per_ch = {c.id: [] for c in chans}
    by_side = {}
    for c, s, t in links:
        eid = b.add_edge(V(s), V(t))
        per_ch[c.id].append(eid)
        by_side.setdefault((V(s), "out"), []).append(eid)
        by_side.setdefault((V(t), "in"), []).append(eid)
    ref = chans[0]
    ps, rs = _loss(ref, dmax)
    term = _x_term(ref, dmax)
    groups = {}
    owner = {e: c.id for c, es in ((c, per_ch[c.id]) for c in chans) for e in es}
    for (v, side), es in by_side.items():
        g = Group(v, side, tuple(es), UniformCap(ref.rate, ground=es),
                  owner[es[0]], term, ps, rs)
        b.groups.append(g)
        for e in es:
            groups.setdefault(owner[e], []).append(g)
    out = []
    for c in chans:
        gs = tuple(dict.fromkeys(groups.get(c.id, ())))
        out.append(CompiledChannel(c.id, c.kind, tuple(per_ch[c.id]), gs, reciprocal,
                                   ps, rs))
    return out


def compile_network(wn: WirelessNetwork, mode: str | None = None,
                    reciprocal: bool | None = None) -> CompiledNetwork:
    """Turn channel specs into a polymatroidal network.

    Modes
    -----
    ``color``
        Each node is split into one vertex per incident color with free
        links between its vertices; every channel contributes its own
        constraints on its color.
    ``snapshot``
        X-family channels only: one vertex per node and a single row/column
        constraint per node over all of its links.
    ``antenna``
        As ``snapshot`` over antenna vertices, with free links joining the
        antennas of one node (``antennas`` in the wireless record).

    With ``reciprocal`` every link gets a reverse partner carrying the same
    constraint, so the result is bidirected.  Gaussian and linear
    deterministic channels must then come as explicit MAC/BC pairs with
    matching parameters; erasure channels must have feedback.
    """
    mode = mode or wn.mode
    reciprocal = wn.reciprocal if reciprocal is None else reciprocal
    if mode not in ("color", "snapshot", "antenna"):
        raise InvalidInputError(f"unknown compile mode {mode!r}")
    ids = [c.id for c in wn.channels]
    if len(set(ids)) != len(ids):
        raise InvalidInputError("duplicate channel ids")
    b = _Builder(mode)
    compiled = []
    skeleton_nodes, origin, intra = [], {}, []
    if mode == "color":
        colors = {c.id: _color(c, wn) for c in wn.channels}
        if reciprocal:
            nofb = [c.id for c in wn.channels if c.kind == "ErasureBCFB" and not c.feedback]
            _, unpaired = _pairs(wn, colors)
            if nofb or unpaired:
                raise InvalidInputError(
                    "reciprocity impossible for channels: " + ", ".join(sorted(nofb + unpaired)))
            auto = {c.id for c in wn.channels if c.kind not in
                    ("GaussianMAC", "GaussianBC", "LinDetMAC", "LinDetBC")}
        for c in wn.channels:
            col = colors[c.id]
            V = lambda v, col=col: f"{v}@{col}"
            compiled.append(_compile_channel(c, b, V, reciprocal and c.id in auto))
        node_colors = {}
        for e in b.edges.values():
            for x in (e.tail, e.head):
                v, col = x.rsplit("@", 1)
                node_colors.setdefault(v, [])
                if x not in node_colors[v]:
                    node_colors[v].append(x)
        for v in list(wn.nodes) + [v for v in node_colors if v not in wn.nodes]:
            vs = node_colors.get(v, [v])
            skeleton_nodes.extend(vs)
            origin.update({x: v for x in vs})
            for x, y in itertools.permutations(vs, 2):
                intra.append(Edge(edge_id(x, y), x, y))
    else:
        if mode == "antenna":
            ant = {str(k): int(v) for k, v in wn.antennas.items()}
            sk = expand_antennas(ant)
            names = set(sk.nodes)
            for c in wn.channels:
                for v in c.sources + c.sinks:
                    if v not in names:
                        raise InvalidInputError(f"{c.id}: {v!r} is not an antenna vertex")
            skeleton_nodes = list(sk.nodes)
            origin = dict(sk.origin)
            intra = list(sk.edges)
        V = lambda v: v
        compiled = _compile_snapshot(wn, b, V, reciprocal)
        if mode == "snapshot":
            seen = list(wn.nodes)
            for e in b.edges.values():
                for x in (e.tail, e.head):
                    if x not in seen:
                        seen.append(x)
            skeleton_nodes = seen
            origin = {v: v for v in seen}
    for e in intra:
        if e.id in b.edges:
            raise InvalidInputError(f"link {e.id!r} collides with a free link")
    edges = list(b.edges.values()) + intra
    net = PolyNet(skeleton_nodes, edges, origin=origin)
    unknown = {x for e in b.edges.values() for x in (e.tail, e.head)} - set(skeleton_nodes)
    if unknown:
        raise InvalidInputError(f"links touch unknown vertices {sorted(unknown)}")
    in_cap, out_cap = {}, {}
    for v in net.nodes:
        for side, caps in (("in", in_cap), ("out", out_cap)):
            mine = [g for g in b.groups if g.vertex == v and g.side == side]
            if not mine:
                continue
            covered = [e for g in mine for e in g.edges]
            if len(set(covered)) != len(covered):
                raise InvalidInputError(f"overlapping constraints at {side} side of {v!r}")
            rest = [e for e in net.delta(v, side) if e not in set(covered)]
            parts = [g.oracle for g in mine] + ([Unbounded(rest)] if rest else [])
            caps[v] = parts[0] if len(parts) == 1 else DirectSum(parts)
    net = PolyNet(net.nodes, net.edges, in_cap, out_cap, origin)
    tau = ReversalMap.infer(net) if reciprocal else None
    return CompiledNetwork(net, tuple(compiled), tau, mode)


# ---------------------------------------------------------------------------
# Cut comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutFactorReport:
    """Polymatroidal cut versus the wireless cut it stands in for.

    ``rows`` holds, per assigned constraint group, the polymatroidal value,
    the wireless cut term at the reduced power and the rate factor.
    ``implied`` is the sum of wireless terms divided by their rate factors;
    ``holds`` is ``poly_cut >= implied`` within tolerance.
    """

    poly_cut: float
    implied: float
    power_scale: float
    rate_scale: float
    holds: bool
    rows: tuple


def wireless_cut_factor_report(compiled: CompiledNetwork, omega,
                               tol: float = 1e-9) -> CutFactorReport:
    """Check a polymatroidal cut against the loss-factor-adjusted wireless cut."""
    from .cutset import cut_cost

    cert = cut_cost(compiled.net, omega)
    rows = []
    poly, implied = 0.0, 0.0
    ps, rs = 1.0, 1.0
    if math.isinf(cert.cost):
        return CutFactorReport(math.inf, math.nan, ps, rs, True, ())
    for g in compiled.groups():
        A = [e for e in g.edges if cert.assignment.get(e) == g.vertex]
        if not A:
            continue
        pv = g.oracle(A)
        wv = g.term(A, g.power_scale)
        rows.append({"channel": g.channel, "vertex": g.vertex, "side": g.side,
                     "edges": A, "poly": pv, "wireless": wv,
                     "powerScale": g.power_scale, "rateScale": g.rate_scale})
        poly += pv
        implied += wv / g.rate_scale
        ps, rs = max(ps, g.power_scale), max(rs, g.rate_scale)
    return CutFactorReport(poly, implied, ps, rs, bool(poly >= implied - tol), tuple(rows))
