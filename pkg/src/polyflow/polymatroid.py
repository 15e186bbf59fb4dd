"""Submodular set-function oracles over small ground sets.

Every oracle is an immutable object mapping subsets of its ground set to
non-negative reals with ``f(empty) == 0``.  Ground elements are opaque
hashable ids (edge ids when the oracle sits on a network node).  Subsets are
also addressed by bitmask internally: bit ``i`` stands for ``ground[i]``.

The module also carries the exact primitives the rest of the package builds
on: exhaustive submodularity/monotonicity checks, the greedy algorithm for
linear optimisation over a polymatroid, membership tests, the Lovasz
extension, and the permutation polytope used by erasure broadcast with
feedback.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, SizeCapError

# Tolerances: exact-formula comparisons vs LP-derived values.
TOL_EXACT = 1e-9
TOL_LP = 1e-6

# Enumeration caps; callers may override per call.
EXHAUSTIVE_CAP = 8
MEMBERSHIP_CAP = 16

__all__ = [
    "TOL_EXACT", "TOL_LP", "EXHAUSTIVE_CAP", "MEMBERSHIP_CAP",
    "SetFunction", "Modular", "CutErasure", "GaussianMacLog", "RankGF",
    "UniformCap", "Scaled", "Truncation", "TableLookup", "Unbounded",
    "DirectSum", "oracle_from_record", "relabel",
    "is_submodular", "is_monotone", "greedy_linear_opt",
    "harmonic_number", "harmonic_gap_factor", "membership",
    "MembershipResult", "PermutationPolytope", "permutation_load",
    "permutation_membership", "lovasz_extension", "RatePolytope",
    "Halfspace", "polymatroid_polytope", "rank_gf", "is_prime",
]


# ---------------------------------------------------------------------------
# Oracle families
# ---------------------------------------------------------------------------

class SetFunction:
    """Base class for set-function oracles.

    Subclasses implement ``_value(idx)`` where ``idx`` is a sorted tuple of
    ground positions, plus ``params()`` for serialisation.
    """

    family = "abstract"

    def __init__(self, ground: Iterable[Hashable]):
        ground = tuple(ground)
        if len(set(ground)) != len(ground):
            raise InvalidInputError(f"duplicate ids in ground set {ground!r}")
        self.ground = ground
        self._pos = {e: i for i, e in enumerate(ground)}

    # -- evaluation ---------------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.ground)

    def indices(self, subset: Iterable[Hashable]) -> tuple[int, ...]:
        idx = set()
        for e in subset:
            try:
                idx.add(self._pos[e])
            except KeyError:
                raise InvalidInputError(
                    f"element {e!r} is not in the ground set of {self.family}"
                ) from None
        return tuple(sorted(idx))

    def __call__(self, subset: Iterable[Hashable] = ()) -> float:
        idx = self.indices(subset)
        if not idx:
            return 0.0
        return float(self._value(idx))

    eval = __call__

    def value_of_mask(self, mask: int) -> float:
        if mask == 0:
            return 0.0
        return float(self._value(_bits(mask)))

    def _value(self, idx: tuple[int, ...]) -> float:
        raise NotImplementedError

    @cached_property
    def table(self) -> np.ndarray:
        """Values over all ``2**n`` subsets, indexed by bitmask."""
        return np.array([self.value_of_mask(m) for m in range(1 << self.n)])

    @property
    def is_bounded(self) -> bool:
        """False if some non-empty subset has infinite value."""
        return True

    def parts(self) -> list["SetFunction"]:
        """Direct-sum components (a single-element list for most families)."""
        return [self]

    # -- exact polymatroid membership shortcut ------------------------------
    def _max_excess(self, x: np.ndarray):
        """Return ``(max_S x(S) - f(S), S_idx)`` or ``None`` if unsupported."""
        return None

    # -- serialisation ------------------------------------------------------
    def params(self) -> dict:
        raise NotImplementedError

    def to_record(self) -> dict:
        return {"family": self.family, "params": self.params(),
                "ground": list(self.ground)}

    def __eq__(self, other):
        return isinstance(other, SetFunction) and self.to_record() == other.to_record()

    def __hash__(self):
        return hash(repr(self.to_record()))

    def __repr__(self):
        p = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({p}, ground={list(self.ground)!r})"


def _bits(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def _default_ground(ground, n):
    return tuple(range(n)) if ground is None else ground


def _subset_sums(x: np.ndarray) -> np.ndarray:
    s = np.zeros(1)
    for xi in x:
        s = np.concatenate([s, s + xi])
    return s


class Modular(SetFunction):
    """``f(S) = sum of weights over S``; weights must be non-negative."""

    family = "Modular"

    def __init__(self, weights: Sequence[float], ground=None):
        self.weights = tuple(float(w) for w in weights)
        if any(w < 0 or not math.isfinite(w) for w in self.weights):
            raise InvalidInputError("modular weights must be finite and >= 0")
        super().__init__(_default_ground(ground, len(self.weights)))
        if self.n != len(self.weights):
            raise InvalidInputError("one weight per ground element required")

    def _value(self, idx):
        return sum(self.weights[i] for i in idx)

    def _max_excess(self, x):
        d = x - np.array(self.weights)
        i = int(np.argmax(d)) if len(d) else 0
        if not len(d) or d[i] <= 0:
            return 0.0, ()
        # Positive-excess elements together maximise x(S) - f(S).
        pos = tuple(int(j) for j in np.flatnonzero(d > 0))
        return float(d[d > 0].sum()), pos

    def params(self):
        return {"weights": list(self.weights)}


class CutErasure(SetFunction):
    """Erasure broadcast cut function ``f(S) = 1 - eps**|S|``."""

    family = "CutErasure"

    def __init__(self, eps: float, n: int | None = None, ground=None):
        if not 0.0 < eps < 1.0:
            raise InvalidInputError(f"erasure probability must lie in (0,1), got {eps}")
        if ground is None:
            if n is None:
                raise InvalidInputError("give either n or ground")
            ground = range(n)
        self.eps = float(eps)
        super().__init__(ground)

    def _value(self, idx):
        return 1.0 - self.eps ** len(idx)

    def _max_excess(self, x):
        order = np.argsort(-x, kind="stable")
        best, best_k = 0.0, 0
        acc = 0.0
        for k in range(1, self.n + 1):
            acc += x[order[k - 1]]
            ex = acc - (1.0 - self.eps ** k)
            if ex > best:
                best, best_k = ex, k
        return best, tuple(sorted(int(i) for i in order[:best_k]))

    def params(self):
        return {"eps": self.eps}


class GaussianMacLog(SetFunction):
    """Gaussian MAC rate function ``log(1 + P * sum_{i in S} |h_i|^2)``.

    ``gains`` are channel amplitudes ``|h_i|``; they are squared here.
    """

    family = "GaussianMacLog"

    def __init__(self, gains: Sequence[float], power: float, log_base: float = 2.0,
                 ground=None):
        self.gains = tuple(abs(float(g)) for g in gains)
        if not self.gains:
            raise InvalidInputError("at least one gain required")
        if power <= 0:
            raise InvalidInputError("power must be positive")
        self.power = float(power)
        self.log_base = float(log_base)
        super().__init__(_default_ground(ground, len(self.gains)))
        if self.n != len(self.gains):
            raise InvalidInputError("one gain per ground element required")
        self._g2 = np.array(self.gains) ** 2

    def _value(self, idx):
        snr = self.power * sum(self._g2[i] for i in idx)
        return math.log1p(snr) / math.log(self.log_base)

    def params(self):
        return {"gains": list(self.gains), "power": self.power, "log_base": self.log_base}


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    for p in range(2, int(math.isqrt(q)) + 1):
        if q % p == 0:
            return False
    return True


def rank_gf(matrix, q: int) -> int:
    """Rank of an integer matrix over the prime field GF(q)."""
    A = np.array(matrix, dtype=np.int64) % q
    if A.ndim != 2:
        raise InvalidInputError("rank_gf expects a 2-D matrix")
    m, n = A.shape
    r = 0
    for c in range(n):
        if r == m:
            break
        piv = np.flatnonzero(A[r:, c])
        if not len(piv):
            continue
        p = r + int(piv[0])
        if p != r:
            A[[r, p]] = A[[p, r]]
        inv = pow(int(A[r, c]), -1, q)
        A[r] = (A[r] * inv) % q
        below = A[r + 1:, c].copy()
        A[r + 1:] = (A[r + 1:] - np.outer(below, A[r])) % q
        r += 1
    return r


class RankGF(SetFunction):
    """``f(S) = log2(q) * rank over GF(q) of the matrices in S stacked``.

    ``orientation="rows"`` stacks vertically (broadcast receivers sharing a
    column dimension); ``"cols"`` concatenates horizontally (MAC transmitters
    sharing a row dimension).
    """

    family = "RankGF"

    def __init__(self, q: int, matrices, orientation: str = "rows", ground=None):
        if not is_prime(int(q)):
            raise InvalidInputError(f"field size must be prime, got {q}")
        if orientation not in ("rows", "cols"):
            raise InvalidInputError("orientation must be 'rows' or 'cols'")
        self.q = int(q)
        self.orientation = orientation
        mats = [np.atleast_2d(np.array(M, dtype=np.int64)) for M in matrices]
        axis = 1 if orientation == "rows" else 0
        if len({M.shape[axis] for M in mats}) > 1:
            raise InvalidInputError("matrices must share the stacking dimension")
        self.matrices = tuple(mats)
        super().__init__(_default_ground(ground, len(mats)))
        if self.n != len(mats):
            raise InvalidInputError("one matrix per ground element required")

    def _value(self, idx):
        blocks = [self.matrices[i] for i in idx]
        M = np.vstack(blocks) if self.orientation == "rows" else np.hstack(blocks)
        return rank_gf(M, self.q) * math.log2(self.q)

    def params(self):
        return {"q": self.q, "orientation": self.orientation,
                "matrices": [M.tolist() for M in self.matrices]}


class UniformCap(SetFunction):
    """Single shared bound: ``f(S) = rate`` for every non-empty ``S``."""

    family = "UniformCap"

    def __init__(self, rate: float, n: int | None = None, ground=None):
        if rate < 0:
            raise InvalidInputError("rate must be non-negative")
        if ground is None:
            if n is None:
                raise InvalidInputError("give either n or ground")
            ground = range(n)
        self.rate = float(rate)
        super().__init__(ground)

    def _value(self, idx):
        return self.rate

    def _max_excess(self, x):
        if not self.n:
            return 0.0, ()
        ex = float(x.sum()) - self.rate
        if ex <= 0:
            return 0.0, ()
        return ex, tuple(int(i) for i in np.flatnonzero(x > 0))

    def params(self):
        return {"rate": self.rate}


class Unbounded(SetFunction):
    """Sentinel for an omitted constraint: infinite on non-empty sets."""

    family = "Unbounded"

    def __init__(self, ground=()):
        super().__init__(ground)

    def _value(self, idx):
        return math.inf

    @property
    def is_bounded(self):
        return self.n == 0

    def _max_excess(self, x):
        return 0.0, ()

    def params(self):
        return {}


class Scaled(SetFunction):
    """``f(S) = factor * inner(S)`` with ``factor >= 0``."""

    family = "Scaled"

    def __init__(self, inner: SetFunction, factor: float):
        if factor < 0:
            raise InvalidInputError("scale factor must be non-negative")
        self.inner = inner
        self.factor = float(factor)
        super().__init__(inner.ground)

    def _value(self, idx):
        v = self.inner._value(idx)
        return 0.0 if self.factor == 0 else self.factor * v

    @property
    def is_bounded(self):
        return self.factor == 0 or self.inner.is_bounded

    def _max_excess(self, x):
        if self.factor == 0:
            pos = tuple(int(i) for i in np.flatnonzero(x > 0))
            return float(x[x > 0].sum()), pos
        r = self.inner._max_excess(x / self.factor)
        if r is None:
            return None
        return r[0] * self.factor, r[1]

    def params(self):
        return {"factor": self.factor, "inner": self.inner.to_record()}


class Truncation(SetFunction):
    """``f(S) = min(inner(S), cap)``."""

    family = "Truncation"

    def __init__(self, inner: SetFunction, cap: float):
        if cap < 0:
            raise InvalidInputError("cap must be non-negative")
        self.inner = inner
        self.cap = float(cap)
        super().__init__(inner.ground)

    def _value(self, idx):
        return min(self.inner._value(idx), self.cap)

    def _max_excess(self, x):
        r = self.inner._max_excess(x)
        if r is None:
            return None
        # x(S) <= min(f(S), cap) for all S  <=>  x in P(f) and x(N) <= cap.
        ex_all = float(x.sum()) - self.cap
        if ex_all > r[0]:
            return ex_all, tuple(range(self.n))
        return r

    def params(self):
        return {"cap": self.cap, "inner": self.inner.to_record()}


class TableLookup(SetFunction):
    """Explicit value table; no submodularity check on construction.

    ``values`` maps subsets (any iterable of ground ids) to reals; subsets
    not listed default to 0 only if ``fill`` is given, otherwise every
    subset must be present.
    """

    family = "TableLookup"

    def __init__(self, values: Mapping[Any, float], ground, fill: float | None = None):
        super().__init__(ground)
        tab = np.full(1 << self.n, np.nan if fill is None else float(fill))
        tab[0] = 0.0
        for subset, v in values.items():
            mask = 0
            for i in self.indices(subset):
                mask |= 1 << i
            tab[mask] = float(v)
        if np.isnan(tab).any():
            raise InvalidInputError("TableLookup needs a value for every subset")
        if tab[0] != 0:
            raise InvalidInputError("f(empty) must be 0")
        self._tab = tab

    def _value(self, idx):
        mask = 0
        for i in idx:
            mask |= 1 << i
        return self._tab[mask]

    def params(self):
        rows = []
        for mask in range(1, 1 << self.n):
            rows.append([[self.ground[i] for i in _bits(mask)], float(self._tab[mask])])
        return {"values": rows}


class DirectSum(SetFunction):
    """Sum of oracles on disjoint ground sets: ``f(S) = sum_k f_k(S & N_k)``."""

    family = "DirectSum"

    def __init__(self, parts: Sequence[SetFunction]):
        self._parts = tuple(parts)
        ground = [e for p in self._parts for e in p.ground]
        super().__init__(ground)
        self._offsets = []
        off = 0
        for p in self._parts:
            self._offsets.append(off)
            off += p.n

    def _value(self, idx):
        total = 0.0
        for p, off in zip(self._parts, self._offsets):
            sub = tuple(i - off for i in idx if off <= i < off + p.n)
            if sub:
                total += p._value(sub)
        return total

    def parts(self):
        out = []
        for p in self._parts:
            out.extend(p.parts())
        return out

    @property
    def is_bounded(self):
        return all(p.is_bounded for p in self._parts)

    def _max_excess(self, x):
        total, wit = 0.0, []
        for p, off in zip(self._parts, self._offsets):
            r = p._max_excess(x[off:off + p.n])
            if r is None:
                return None
            if r[0] > 0:
                total += r[0]
                wit.extend(i + off for i in r[1])
        return total, tuple(wit)

    def params(self):
        return {"parts": [p.to_record() for p in self._parts]}


def _tuple_keys(x):
    return tuple(x) if isinstance(x, list) else x


def oracle_from_record(rec: Mapping) -> SetFunction:
    """Inverse of ``SetFunction.to_record``."""
    try:
        fam = rec["family"]
        p = rec.get("params", {})
        ground = [_tuple_keys(g) for g in rec.get("ground", [])]
    except (KeyError, TypeError, AttributeError) as exc:
        raise InvalidInputError(f"malformed oracle record: {rec!r}") from exc
    try:
        if fam == "Modular":
            return Modular(p["weights"], ground=ground)
        if fam == "CutErasure":
            return CutErasure(p["eps"], ground=ground)
        if fam == "GaussianMacLog":
            return GaussianMacLog(p["gains"], p["power"], p.get("log_base", 2.0),
                                  ground=ground)
        if fam == "RankGF":
            return RankGF(p["q"], p["matrices"], p.get("orientation", "rows"),
                          ground=ground)
        if fam == "UniformCap":
            return UniformCap(p["rate"], ground=ground)
        if fam == "Unbounded":
            return Unbounded(ground)
        if fam == "Scaled":
            inner = oracle_from_record(p["inner"])
            return Scaled(_with_ground(inner, ground), p["factor"])
        if fam == "Truncation":
            inner = oracle_from_record(p["inner"])
            return Truncation(_with_ground(inner, ground), p["cap"])
        if fam == "TableLookup":
            vals = {tuple(_tuple_keys(e) for e in s): v for s, v in p["values"]}
            return TableLookup(vals, ground)
        if fam == "DirectSum":
            parts = [oracle_from_record(r) for r in p["parts"]]
            out = DirectSum(parts)
            if ground and list(out.ground) != ground:
                raise InvalidInputError("DirectSum ground must be the parts' concatenation")
            return out
    except KeyError as exc:
        raise InvalidInputError(f"oracle {fam!r} missing parameter {exc}") from exc
    raise InvalidInputError(f"unknown oracle family {fam!r}")


def _with_ground(oracle, ground):
    if not ground or list(oracle.ground) == list(ground):
        return oracle
    if len(ground) != oracle.n:
        raise InvalidInputError("ground size mismatch in nested oracle record")
    return relabel(oracle, dict(zip(oracle.ground, ground)))


def relabel(oracle: SetFunction, mapping: Mapping[Hashable, Hashable]) -> SetFunction:
    """Same set function with ground ids renamed through ``mapping``."""

    def walk(rec):
        rec = dict(rec)
        rec["ground"] = [mapping.get(_tuple_keys(g), g) for g in rec["ground"]]
        p = dict(rec["params"])
        if "inner" in p:
            p["inner"] = walk(p["inner"])
        if "parts" in p:
            p["parts"] = [walk(r) for r in p["parts"]]
        if rec["family"] == "TableLookup":
            p["values"] = [[[mapping.get(e, e) for e in s], v] for s, v in p["values"]]
        rec["params"] = p
        return rec

    return oracle_from_record(walk(oracle.to_record()))


# ---------------------------------------------------------------------------
# Exhaustive property checks
# ---------------------------------------------------------------------------

def _check_cap(n, cap, what):
    if n > cap:
        raise SizeCapError(n, cap, what)


@lru_cache(maxsize=None)
def _pair_masks(n):
    m = np.arange(1 << n)
    A, B = np.meshgrid(m, m, indexing="ij")
    return A.ravel(), B.ravel()


def is_submodular(oracle: SetFunction, cap: int = EXHAUSTIVE_CAP,
                  tol: float = TOL_EXACT) -> bool:
    """Check ``f(A) + f(B) >= f(A|B) + f(A&B)`` over every pair of subsets."""
    _check_cap(oracle.n, cap, oracle.family)
    t = oracle.table
    A, B = _pair_masks(oracle.n)
    with np.errstate(invalid="ignore"):
        lhs = t[A] + t[B]
        rhs = t[A | B] + t[A & B]
        return bool(np.all(lhs + tol >= rhs))


def is_monotone(oracle: SetFunction, cap: int = EXHAUSTIVE_CAP,
                tol: float = TOL_EXACT) -> bool:
    """Check ``f(A) <= f(B)`` for every nested pair ``A <= B``."""
    _check_cap(oracle.n, cap, oracle.family)
    t = oracle.table
    A, B = _pair_masks(oracle.n)
    nested = (A & B) == A
    return bool(np.all(t[A[nested]] <= t[B[nested]] + tol))


# ---------------------------------------------------------------------------
# Optimisation and membership
# ---------------------------------------------------------------------------

def _aligned(oracle, values, name):
    if isinstance(values, Mapping):
        arr = np.array([float(values.get(e, 0.0)) for e in oracle.ground])
        extra = set(values) - set(oracle.ground)
        if extra:
            raise InvalidInputError(f"{name} has ids outside the ground set: {extra}")
        return arr
    arr = np.asarray(values, dtype=float).ravel()
    if len(arr) != oracle.n:
        raise InvalidInputError(f"{name} must have one entry per ground element")
    return arr


def greedy_linear_opt(oracle: SetFunction, weights) -> tuple[np.ndarray, float]:
    """Maximise ``w . x`` over the polymatroid of ``oracle`` (Edmonds' greedy).

    Parameters
    ----------
    oracle : SetFunction
        A monotone submodular function.
    weights : sequence or mapping
        One weight per ground element (aligned with ``oracle.ground`` if a
        sequence).

    Returns
    -------
    x : numpy.ndarray
        The optimal vertex, aligned with ``oracle.ground``.
    value : float
        ``w . x``.
    """
    w = _aligned(oracle, weights, "weights")
    if not np.all(np.isfinite(w)):
        raise InvalidInputError("weights must be finite")
    order = np.argsort(-w, kind="stable")
    x = np.zeros(oracle.n)
    prev, mask = 0.0, 0
    for i in order:
        if w[i] <= 0:
            break
        mask |= 1 << int(i)
        cur = oracle.value_of_mask(mask)
        if not math.isfinite(cur):
            raise InvalidInputError("greedy needs a bounded oracle")
        x[i] = cur - prev
        prev = cur
    return x, float(w @ x)


def harmonic_number(d: int) -> float:
    """``H_d = sum_{i=1..d} 1/i``."""
    if d < 0:
        raise InvalidInputError("d must be non-negative")
    return float(sum(1.0 / i for i in range(1, d + 1)))


def harmonic_gap_factor(d: int, eps: float) -> float:
    """Worst-case ratio between the erasure cut region and the feedback region.

    Sum over ``i = 1..d`` of ``(eps**(i-1) - eps**i) / (1 - eps**i)``: the
    value of the greedy vertex of the cut polymatroid under the feedback
    region's weights ``1/(1-eps**i)``.  Always at most ``H_d``.
    """
    if not 0.0 < eps < 1.0:
        raise InvalidInputError(f"eps must lie in (0,1), got {eps}")
    if d < 1:
        raise InvalidInputError("d must be at least 1")
    i = np.arange(1, d + 1)
    return float(np.sum((eps ** (i - 1) - eps ** i) / (1.0 - eps ** i)))


@dataclass(frozen=True)
class MembershipResult:
    """Outcome of a polytope membership query; truthy iff ``member``."""

    member: bool
    witness: frozenset | None = None
    excess: float = 0.0

    def __bool__(self):
        return self.member


def membership(x, oracle: SetFunction, cap: int = MEMBERSHIP_CAP,
               tol: float = TOL_EXACT) -> MembershipResult:
    """Test ``x >= 0`` and ``x(S) <= f(S)`` for every subset ``S``.

    Structured families answer exactly at any size; otherwise subsets are
    enumerated and the ground set must not exceed ``cap``.  On failure the
    witness is a maximally violated subset.
    """
    xs = _aligned(oracle, x, "x")
    if np.any(xs < -tol):
        i = int(np.argmin(xs))
        return MembershipResult(False, frozenset([oracle.ground[i]]), float(-xs[i]))
    fast = oracle._max_excess(np.maximum(xs, 0.0))
    if fast is not None:
        ex, idx = fast
    else:
        _check_cap(oracle.n, cap, oracle.family)
        with np.errstate(invalid="ignore"):
            excess = _subset_sums(xs) - oracle.table
        m = int(np.argmax(excess))
        ex, idx = float(excess[m]), _bits(m)
    if ex > tol:
        return MembershipResult(False, frozenset(oracle.ground[i] for i in idx), ex)
    return MembershipResult(True)


@dataclass(frozen=True)
class PermutationPolytope:
    """``{x >= 0 : sum_i x[pi(i)] / w_i <= 1 for every permutation pi}``."""

    coefficients: tuple

    def __post_init__(self):
        w = tuple(float(c) for c in self.coefficients)
        if any(c <= 0 for c in w):
            raise InvalidInputError("coefficients must be positive")
        object.__setattr__(self, "coefficients", w)

    @property
    def dimension(self) -> int:
        return len(self.coefficients)

    @classmethod
    def erasure_feedback(cls, d: int, eps: float) -> "PermutationPolytope":
        """Region of erasure broadcast with ACK feedback: ``w_i = 1 - eps**i``."""
        if not 0.0 < eps < 1.0:
            raise InvalidInputError("eps must lie in (0,1)")
        return cls(tuple(1.0 - eps ** i for i in range(1, d + 1)))


@lru_cache(maxsize=None)
def _perms(d):
    return np.array(list(itertools.permutations(range(d))), dtype=np.intp).reshape(-1, d)


def permutation_load(x, region: PermutationPolytope, cap: int = EXHAUSTIVE_CAP) -> float:
    """``max over permutations pi of sum_i x[pi(i)] / w_i`` by enumeration."""
    d = region.dimension
    _check_cap(d, cap, "permutation polytope")
    xs = np.asarray(x, dtype=float).ravel()
    if len(xs) != d:
        raise InvalidInputError("x must match the region dimension")
    if d == 0:
        return 0.0
    inv_w = 1.0 / np.array(region.coefficients)
    return float(np.max(xs[_perms(d)] @ inv_w))


def permutation_membership(x, region: PermutationPolytope, cap: int = EXHAUSTIVE_CAP,
                           tol: float = TOL_EXACT) -> bool:
    xs = np.asarray(x, dtype=float).ravel()
    if np.any(xs < -tol):
        return False
    return permutation_load(xs, region, cap) <= 1.0 + tol


def lovasz_extension(oracle: SetFunction, x) -> float:
    """Chain-formula Lovasz extension for ``x`` in the unit cube."""
    xs = _aligned(oracle, x, "x")
    if np.any(xs < 0) or np.any(xs > 1):
        raise InvalidInputError("Lovasz extension expects components in [0,1]")
    order = np.argsort(-xs, kind="stable")
    val, mask = 0.0, 0
    for k, i in enumerate(order):
        mask |= 1 << int(i)
        nxt = xs[order[k + 1]] if k + 1 < len(order) else 0.0
        step = xs[i] - nxt
        if step > 0:
            val += step * oracle.value_of_mask(mask)
    return float(val)


# ---------------------------------------------------------------------------
# Explicit half-space regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Halfspace:
    coef: tuple
    bound: float
    tag: Any = None


@dataclass(frozen=True)
class RatePolytope:
    """Down-closed region ``{x >= 0 : a . x <= b}`` with ``a, b >= 0``."""

    dimension: int
    halfspaces: tuple = field(default_factory=tuple)

    def __post_init__(self):
        hs = tuple(self.halfspaces)
        for h in hs:
            if len(h.coef) != self.dimension:
                raise InvalidInputError("half-space dimension mismatch")
            if min(h.coef, default=0) < 0 or h.bound < 0:
                raise InvalidInputError("down-closed regions need non-negative data")
        object.__setattr__(self, "halfspaces", hs)

    def matrix(self):
        A = np.array([h.coef for h in self.halfspaces], dtype=float).reshape(-1, self.dimension)
        b = np.array([h.bound for h in self.halfspaces], dtype=float)
        return A, b

    def contains(self, x, tol: float = TOL_EXACT) -> bool:
        xs = np.asarray(x, dtype=float)
        if np.any(xs < -tol):
            return False
        A, b = self.matrix()
        return bool(np.all(A @ xs <= b + tol))

    def scaled(self, factor: float) -> "RatePolytope":
        """The region multiplied by ``factor`` (bounds scale, shape does not)."""
        return RatePolytope(self.dimension, tuple(
            Halfspace(h.coef, h.bound * factor, h.tag) for h in self.halfspaces))

    def support(self, w) -> float:
        """``max w . x`` over the region, for ``w >= 0``."""
        from scipy.optimize import linprog

        A, b = self.matrix()
        res = linprog(-np.asarray(w, dtype=float), A_ub=A if len(b) else None,
                      b_ub=b if len(b) else None, bounds=(0, None), method="highs")
        if res.status == 3:
            return math.inf
        return float(-res.fun)


def polymatroid_polytope(oracle: SetFunction, cap: int = MEMBERSHIP_CAP) -> RatePolytope:
    """All ``2**n - 1`` subset constraints of a bounded oracle as half-spaces."""
    _check_cap(oracle.n, cap, oracle.family)
    hs = []
    for mask in range(1, 1 << oracle.n):
        v = oracle.value_of_mask(mask)
        if math.isinf(v):
            continue
        coef = tuple(1.0 if mask >> i & 1 else 0.0 for i in range(oracle.n))
        hs.append(Halfspace(coef, v, frozenset(oracle.ground[i] for i in _bits(mask))))
    return RatePolytope(oracle.n, tuple(hs))
