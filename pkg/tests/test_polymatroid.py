import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from polyflow.errors import InvalidInputError, SizeCapError
from polyflow.fuzz import FAMILIES, random_oracle
from polyflow.polymatroid import (
    CutErasure, DirectSum, GaussianMacLog, Modular, PermutationPolytope, RankGF, Scaled,
    TableLookup, Truncation, Unbounded, UniformCap, greedy_linear_opt, harmonic_gap_factor,
    harmonic_number, is_monotone, is_submodular, lovasz_extension, membership,
    oracle_from_record, permutation_membership, polymatroid_polytope, rank_gf, relabel,
)


def subsets(ground):
    for r in range(len(ground) + 1):
        yield from itertools.combinations(ground, r)


def lp_max(oracle, w):
    """Independent optimum of w.x over all subset constraints."""
    n = oracle.n
    rows = [[1.0 if i in S else 0.0 for i in range(n)] for S in subsets(range(n)) if S]
    b = [oracle([oracle.ground[i] for i in range(n) if r[i]]) for r in rows]
    res = linprog(-np.asarray(w, float), A_ub=rows, b_ub=b, bounds=[(0, None)] * n,
                  method="highs")
    return -res.fun


# ---------------------------------------------------------------------------
# Frozen values
# ---------------------------------------------------------------------------

def test_gaussian_mac_values():
    f = GaussianMacLog([1, 1], 1.0)
    assert f([0]) == pytest.approx(1.0, abs=1e-12)
    assert f([0, 1]) == pytest.approx(math.log2(3), abs=1e-12)
    assert f([]) == 0.0


def test_gaussian_gains_are_amplitudes():
    f = GaussianMacLog([2.0], 1.0)
    assert f([0]) == pytest.approx(math.log2(5), abs=1e-12)


def test_cut_erasure_values():
    f = CutErasure(0.5, 3)
    assert [f(S) for S in ([0], [0, 1], [0, 1, 2])] == pytest.approx([0.5, 0.75, 0.875])


def test_rank_gf_examples():
    assert RankGF(2, [[[1, 0]], [[0, 1]]])([0, 1]) == pytest.approx(2.0)
    assert RankGF(2, [[[1, 0]], [[0, 1]]])([0]) == pytest.approx(1.0)
    assert RankGF(2, [[[1, 0]], [[1, 0]]])([0, 1]) == pytest.approx(1.0)
    # over GF(3) the rank is scaled by log2(3) bits
    assert RankGF(3, [[[1, 0]], [[1, 1]]])([0, 1]) == pytest.approx(2 * math.log2(3))
    assert RankGF(3, [[[1, 2]], [[2, 1]]])([0, 1]) == pytest.approx(math.log2(3))
    # rows (1,1) and (1,2) are independent over GF(3) but (1,1),(2,2) are not
    assert rank_gf([[1, 1], [2, 2]], 3) == 1
    assert rank_gf([[1, 1], [1, 2]], 3) == 2


def test_rank_mac_orientation_matches_transpose():
    H = [np.array([[1, 0, 1]]), np.array([[0, 1, 1]])]
    bc = RankGF(2, H, "rows")
    mac = RankGF(2, [h.T for h in H], "cols")
    for S in subsets(range(2)):
        assert bc(S) == mac(S)


def test_uniform_and_unbounded():
    u = UniformCap(0.4, 3)
    assert u([]) == 0 and u([0]) == 0.4 and u([0, 1, 2]) == 0.4
    assert Unbounded([0, 1])([0]) == math.inf
    assert Unbounded([0, 1])([]) == 0.0


def test_scaled_truncation_directsum():
    m = Modular([1.0, 2.0, 3.0])
    assert Scaled(m, 0.5)([1, 2]) == pytest.approx(2.5)
    assert Truncation(m, 2.5)([0, 1]) == pytest.approx(2.5)
    assert Truncation(m, 2.5)([0]) == pytest.approx(1.0)
    d = DirectSum([CutErasure(0.5, ground=["a", "b"]), UniformCap(1.0, ground=["c"])])
    assert d(["a", "b", "c"]) == pytest.approx(1.75)
    assert [p.family for p in d.parts()] == ["CutErasure", "UniformCap"]


def test_unknown_element_rejected():
    with pytest.raises(InvalidInputError):
        Modular([1.0])(["zzz"])


def test_table_lookup_counterexamples():
    t = TableLookup({(1,): 1, (2,): 1, (1, 2): 3}, [1, 2])
    assert not is_submodular(t)
    assert is_monotone(t)
    t2 = TableLookup({(1,): 2, (2,): 1, (1, 2): 1}, [1, 2])
    assert not is_monotone(t2)


def test_modular_passes_both_laws():
    m = Modular([0.3, 1.2, 0.0, 4.0])
    assert is_submodular(m) and is_monotone(m)


def test_exhaustive_cap():
    with pytest.raises(SizeCapError):
        is_submodular(Modular(np.ones(9)))


def test_greedy_erasure_example():
    x, v = greedy_linear_opt(CutErasure(0.5, 2), [2.0, 4.0 / 3.0])
    assert x == pytest.approx([0.5, 0.25])
    assert v == pytest.approx(4.0 / 3.0)


def test_greedy_zero_weights():
    x, v = greedy_linear_opt(GaussianMacLog([1, 2], 1.0), [0.0, 0.0])
    assert v == 0.0 and not np.any(x)


def test_greedy_unit_weights_hits_full_set():
    _, v = greedy_linear_opt(GaussianMacLog([1, 1], 1.0), [1, 1])
    assert v == pytest.approx(math.log2(3))


def test_harmonic_gap_values():
    assert harmonic_gap_factor(2, 0.5) == pytest.approx(4 / 3, abs=1e-15)
    assert harmonic_gap_factor(3, 0.5) == pytest.approx(1 + 1 / 3 + 1 / 7, abs=1e-15)
    assert harmonic_gap_factor(1, 0.37) == pytest.approx(1.0)
    with pytest.raises(InvalidInputError):
        harmonic_gap_factor(2, 1.0)


def test_membership_example():
    r = membership([1.0, 1.0], GaussianMacLog([1, 1], 1.0))
    assert not r
    assert r.witness == frozenset({0, 1})
    assert r.excess == pytest.approx(2 - math.log2(3))
    assert membership([0.0, 0.0], GaussianMacLog([1, 1], 1.0))


def test_permutation_membership_examples():
    reg = PermutationPolytope.erasure_feedback(2, 0.5)
    assert reg.coefficients == pytest.approx((0.5, 0.75))
    assert permutation_membership([0.5, 0.0], reg)
    assert not permutation_membership([0.5, 0.2], reg)
    assert permutation_membership([0.0, 0.0], reg)


def test_lovasz_example():
    f = GaussianMacLog([1, 1], 1.0)
    assert lovasz_extension(f, [1.0, 0.5]) == pytest.approx(0.5 * math.log2(3) + 0.5)
    with pytest.raises(InvalidInputError):
        lovasz_extension(f, [1.5, 0.0])


def test_polytope_support_matches_greedy():
    f = GaussianMacLog([1.0, 0.5, 2.0], 2.0)
    poly = polymatroid_polytope(f)
    w = [0.3, 1.0, 0.7]
    assert poly.support(w) == pytest.approx(greedy_linear_opt(f, w)[1], abs=1e-7)


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)
family = st.sampled_from(FAMILIES)
size = st.integers(1, 6)


@given(family, size, seeds)
def test_every_family_is_a_polymatroid(fam, n, seed):
    f = random_oracle(fam, n, seed)
    assert f([]) == 0.0
    assert is_submodular(f) and is_monotone(f)


# HiGHS treats cost coefficients below its 1e-7 dual tolerance as zero, so
# the LP reference is only trustworthy for weights that are 0 or clearly positive.
weight = st.one_of(st.just(0.0), st.floats(1e-3, 5))


@given(family, size, seeds, st.lists(weight, min_size=6, max_size=6))
def test_greedy_equals_lp(fam, n, seed, w):
    f = random_oracle(fam, n, seed)
    w = w[:f.n]
    x, v = greedy_linear_opt(f, w)
    assert v == pytest.approx(lp_max(f, w), abs=1e-7)
    assert membership(x, f)


@given(family, size, seeds, st.lists(st.floats(0, 3), min_size=6, max_size=6))
def test_membership_agrees_with_enumeration(fam, n, seed, x):
    f = random_oracle(fam, n, seed)
    x = np.asarray(x[:f.n])
    slack = min(f(S) - sum(x[list(S)]) for S in subsets(range(f.n)) if S)
    r = membership(x, f)
    if slack > 1e-7:
        assert r
    elif slack < -1e-7:
        assert not r
        S = [f.ground.index(e) for e in r.witness]
        assert f(r.witness) - x[S].sum() == pytest.approx(slack, abs=1e-9)


@given(family, size, seeds)
def test_record_round_trip(fam, n, seed):
    f = random_oracle(fam, n, seed)
    g = oracle_from_record(f.to_record())
    assert np.allclose(f.table, g.table)


@given(family, st.integers(1, 5), seeds)
def test_lovasz_matches_indicators(fam, n, seed):
    f = random_oracle(fam, n, seed)
    for S in subsets(range(f.n)):
        x = np.zeros(f.n)
        x[list(S)] = 1
        assert lovasz_extension(f, x) == pytest.approx(f([f.ground[i] for i in S]), abs=1e-9)


@given(st.lists(st.floats(0, 3), min_size=1, max_size=6),
       st.lists(st.floats(0, 1), min_size=6, max_size=6), st.floats(0.01, 1.0))
def test_lovasz_homogeneous_on_modular(w, x, c):
    f = Modular(w)
    x = np.asarray(x[:len(w)])
    assert lovasz_extension(f, c * x) == pytest.approx(c * lovasz_extension(f, x), abs=1e-9)
    assert lovasz_extension(f, x) == pytest.approx(float(np.dot(w, x)), abs=1e-9)


@given(st.integers(1, 64), st.floats(0.01, 0.99))
def test_harmonic_gap_below_harmonic_number(d, eps):
    assert harmonic_gap_factor(d, eps) <= harmonic_number(d) + 1e-12


@given(family, size, seeds)
def test_relabel_preserves_values(fam, n, seed):
    f = random_oracle(fam, n, seed)
    g = relabel(f, {e: f"e{e}" for e in f.ground})
    assert np.allclose(f.table, g.table)
    assert g.ground == tuple(f"e{e}" for e in f.ground)
