import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import exp1

from polyflow.channels import (
    DelayedCsitBC, DiscreteSymmetric, ErasureBCFB, FadingLdX, FadingX, FixedXdof, GaussianBC,
    GaussianMAC, LinDetBC, LinDetMAC, RayleighUnitVariance, WirelessNetwork, channel_from_record,
    channel_to_record, compile_network, degree_polytope_vertices, delayed_csit_bc_dof, dof_psi,
    dof_zeta, erasure_regions, gaussian_mac_region, ld_region, ld_x_region, mac_erasure_region,
    matchings, power_scaling_check, wireless_cut_factor_report, wireless_from_record,
    x_channel_dof_region, x_channel_region,
)
from polyflow.cutset import min_cut
from polyflow.errors import InvalidInputError
from polyflow.flowsolve import max_concurrent_flow
from polyflow.netmodel import TrafficPattern, add_super_source_sink, is_bidirected, validate
from polyflow.polymatroid import (
    CutErasure, greedy_linear_opt, harmonic_gap_factor, is_monotone, is_submodular,
    permutation_membership,
)

PM1 = DiscreteSymmetric((1.0, -1.0), (0.5, 0.5))


# ---------------------------------------------------------------------------
# Gaussian
# ---------------------------------------------------------------------------

def test_gaussian_region_values():
    f = gaussian_mac_region([1, 1], 1.0)
    assert f([0]) == pytest.approx(1.0) and f([0, 1]) == pytest.approx(1.585, abs=1e-3)
    assert gaussian_mac_region([1, 1, 1], 1.0)([0, 1, 2]) == pytest.approx(2.0, abs=1e-12)
    assert gaussian_mac_region([0.7], 3.0)([0]) == pytest.approx(math.log2(1 + 0.49 * 3))


def full_row(rep):
    return max(rep.rows, key=lambda r: len(r[0]))


def test_power_scaling_equal_gains_saturate():
    rep = power_scaling_check([1, 1], 1.0)
    _, g, p = full_row(rep)
    assert g == pytest.approx(math.log2(5), abs=1e-12) and p == pytest.approx(g, abs=1e-12)
    assert rep.holds


def test_power_scaling_unequal_gains_strict():
    rep = power_scaling_check([1, 2], 1.0)
    _, g, p = full_row(rep)
    assert g == pytest.approx(math.log2(10)) and p == pytest.approx(math.log2(11))
    assert rep.holds and not rep.tight


def test_power_scaling_singletons_compare_d_fold_power():
    for S, g, p in power_scaling_check([0.3, 1.7, 2.0], 2.0).rows:
        if len(S) == 1:
            assert g <= p


@given(st.lists(st.floats(0, 5), min_size=1, max_size=6), st.floats(0.01, 100))
def test_power_scaling_always_holds(gains, P):
    rep = power_scaling_check(gains, P)
    assert rep.holds
    h = np.abs(gains)
    S, g, p = full_row(rep)
    assert g == pytest.approx(math.log2(1 + h.sum() ** 2 * P), rel=1e-12)
    assert p == pytest.approx(math.log2(1 + (h ** 2).sum() * len(h) * P), rel=1e-12)


@given(st.floats(0.01, 5), st.integers(1, 6), st.floats(0.01, 100))
def test_power_scaling_equal_gains_full_set_equality(h, d, P):
    assert abs(full_row(power_scaling_check([h] * d, P))[1]
               - full_row(power_scaling_check([h] * d, P))[2]) <= 1e-9


# ---------------------------------------------------------------------------
# Erasure
# ---------------------------------------------------------------------------

def test_erasure_cut_table():
    reg = erasure_regions(3, 0.5)
    assert [reg.cut(list(range(r))) for r in (1, 2, 3)] == pytest.approx([0.5, 0.75, 0.875])
    assert reg.harmonic_factor == pytest.approx(1 + 1 / 3 + 1 / 7)


def test_erasure_no_feedback_ratio_near_one_over_d():
    r = erasure_regions(4, 0.999).no_fb_ratio
    assert r == pytest.approx(0.2504, abs=1e-4)
    assert abs(r - 0.25) / 0.25 < 0.005


def test_single_user_erasure_regions_coincide():
    reg = erasure_regions(1, 0.3)
    assert reg.cut([0]) == pytest.approx(0.7)
    assert reg.harmonic_factor == pytest.approx(1.0)
    assert reg.no_fb_ratio == pytest.approx(1.0)
    assert permutation_membership([0.7], reg.fb)
    assert not permutation_membership([0.71], reg.fb)


def test_erasure_rejects_bad_parameters():
    with pytest.raises(InvalidInputError):
        erasure_regions(0, 0.5)
    with pytest.raises(InvalidInputError):
        erasure_regions(2, 1.0)


def test_mac_erasure_matches_cut():
    f = mac_erasure_region(2, 0.5)
    assert f([0, 1]) == pytest.approx(0.75) and f([]) == 0.0
    g = CutErasure(0.5, 2)
    assert np.allclose(f.table, g.table)


@given(st.integers(1, 6), st.floats(0.01, 0.99), st.integers(0, 10**6))
def test_scaled_cut_points_have_feedback_schedules(d, eps, seed):
    reg = erasure_regions(d, eps)
    rng = np.random.default_rng(seed)
    verts = [greedy_linear_opt(reg.cut, rng.random(d))[0] for _ in range(4)]
    lam = rng.dirichlet(np.ones(len(verts)))
    x = sum(l * v for l, v in zip(lam, verts)) * rng.random()
    assert permutation_membership(x / reg.harmonic_factor, reg.fb, tol=1e-9)


# ---------------------------------------------------------------------------
# Fading and X channels
# ---------------------------------------------------------------------------

def test_plus_minus_one_fading():
    assert PM1.a == 1.0
    assert PM1.capacity(2.0) == pytest.approx(0.5 * math.log2(3), abs=1e-12)
    reg = x_channel_region([("s", "t")], 1.0, PM1)
    assert reg.rate == pytest.approx(0.39624, abs=1e-5)


def test_rayleigh_constant_and_capacity():
    ray = RayleighUnitVariance()
    assert ray.a == pytest.approx(math.exp(np.euler_gamma), abs=1e-12)
    assert ray.a == pytest.approx(1.781, abs=1e-3)
    assert ray.b == pytest.approx(ray.a / 2)
    for P in (0.5, 1.0, 4.0):
        ref = 0.5 * math.exp(1 / P) * exp1(1 / P) / math.log(2)
        assert ray.capacity(P) == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_rayleigh_monte_carlo_within_two_percent(seed):
    ray = RayleighUnitVariance()
    assert abs(ray.a_monte_carlo(200_000, seed) / ray.a - 1) < 0.02


def test_fading_model_validation():
    with pytest.raises(InvalidInputError):
        DiscreteSymmetric((1.0, 2.0), (0.5, 0.5))
    with pytest.raises(InvalidInputError):
        DiscreteSymmetric((0.0,), (1.0,))
    d = DiscreteSymmetric((0.5, -0.5, 2.0, -2.0), (0.25, 0.25, 0.25, 0.25))
    assert d.a == pytest.approx(1.0)


def test_x_midpoint_of_perfect_matchings():
    E = [(s, t) for s in ("s1", "s2") for t in ("t1", "t2")]
    reg = x_channel_region(E, 1.0, PM1)
    mid = {e: reg.rate / 2 for e in reg.edges}
    assert reg.contains(mid)
    m1 = {"s1>t1": reg.rate, "s2>t2": reg.rate}
    m2 = {"s1>t2": reg.rate, "s2>t1": reg.rate}
    assert reg.contains(m1) and reg.contains(m2)
    assert all(mid[e] == pytest.approx((m1.get(e, 0) + m2.get(e, 0)) / 2) for e in reg.edges)
    assert not reg.contains({"s1>t1": reg.rate, "s1>t2": 0.01})


def test_x_dof_region():
    star = x_channel_dof_region([("s", t) for t in ("a", "b", "c")])
    assert star.out_cap["s"](["s>a", "s>b", "s>c"]) == 0.5
    assert x_channel_dof_region([("s", "t")]).rate == 0.5
    empty = x_channel_dof_region([])
    assert empty.edges == () and empty.out_cap == {} and empty.in_cap == {}
    assert ld_x_region([("s", "t")], 5).rate == pytest.approx(0.5 * math.log2(5))


def test_x_rejects_non_bipartite():
    with pytest.raises(InvalidInputError):
        x_channel_dof_region([("a", "b"), ("b", "c")])


# ---------------------------------------------------------------------------
# Matchings and DOF maps
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("L,M", [(1, 1), (1, 3), (2, 2), (2, 3), (3, 3)])
def test_degree_polytope_vertices_are_matchings(L, M):
    verts = {tuple(v) for v in degree_polytope_vertices(L, M)}
    mats = {tuple(m) for m in matchings(L, M)}
    assert verts == mats


def test_matching_count_3x3():
    assert len(matchings(3, 3)) == 34


@given(st.integers(1, 4), st.lists(st.fractions(0, 1), min_size=1, max_size=4))
def test_dof_maps_round_trip_exactly(l, d):
    assert dof_zeta(dof_psi(d, l), l) == d


def test_psi_example():
    x = dof_psi([Fraction(1, 2), Fraction(1, 4)], 2)
    assert x == [[Fraction(3, 8), Fraction(3, 16)]] * 2


# ---------------------------------------------------------------------------
# Linear deterministic and delayed CSIT
# ---------------------------------------------------------------------------

def test_ld_region_examples():
    f = ld_region([[[1, 0]], [[0, 1]]], 2)
    assert f([0]) == 1 and f([0, 1]) == 2
    assert ld_region([[[1, 0]], [[1, 0]]], 2)([0, 1]) == 1


def test_ld_region_random_gf3_is_polymatroid():
    rng = np.random.default_rng(4)
    f = ld_region([rng.integers(0, 3, (2, 3)) for _ in range(3)], 3)
    assert is_submodular(f) and is_monotone(f)


def test_delayed_csit_numbers():
    two = delayed_csit_bc_dof(2, [1, 1])
    assert two.sum_bound == pytest.approx(4 / 3, abs=1e-12)
    assert two.factor == pytest.approx(1.5, abs=1e-12)
    three = delayed_csit_bc_dof(3, [1, 1, 1])
    assert three.oracle([0]) == pytest.approx(6 / 11, abs=1e-12)
    assert three.oracle([0, 1, 2]) == pytest.approx(18 / 11, abs=1e-12)
    assert three.factor == pytest.approx(11 / 6, abs=1e-12)
    one = delayed_csit_bc_dof(1, [1])
    assert one.factor == 1.0 and one.oracle([0]) == one.cut_oracle([0]) == 1.0


def test_delayed_csit_multi_antenna_receivers():
    reg = delayed_csit_bc_dof(3, [2, 2])
    assert reg.p == 3
    assert reg.cut_oracle([0]) == 2 and reg.cut_oracle([0, 1]) == 3
    assert reg.oracle([0, 1]) == pytest.approx(3 / (1 + 1 / 2 + 1 / 3))


@given(st.integers(1, 5), st.lists(st.integers(1, 3), min_size=1, max_size=4))
def test_delayed_csit_factor_is_harmonic(l, m):
    reg = delayed_csit_bc_dof(l, m)
    p = min(l, sum(m))
    assert reg.factor == pytest.approx(sum(1 / i for i in range(1, p + 1)), abs=1e-12)
    full = list(range(len(m)))
    assert reg.cut_oracle(full) == pytest.approx(reg.factor * reg.oracle(full), abs=1e-12)


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

def mac_bc_pair(gain_back=(1.0, 0.5)):
    return WirelessNetwork((
        GaussianMAC("m", "v", ("u1", "u2"), (1.0, 0.5), 2.0, color="c"),
        GaussianBC("b", "v", ("u1", "u2"), gain_back, 2.0, color="c"),
    ))


def test_two_color_mac_bc_structure():
    wn = WirelessNetwork((
        GaussianMAC("mac", "v", ("u1", "u2"), (1.0, 0.8), 1.0, color="red"),
        GaussianBC("bc", "v", ("w1", "w2"), (0.9, 1.2), 1.0, color="blue"),
    ))
    cn = compile_network(wn)
    # node counts equal the number of colors each node touches
    assert len(cn.net.nodes) == 6
    assert sorted(cn.net.nodes) == sorted(["u1@red", "u2@red", "v@red", "v@blue",
                                           "w1@blue", "w2@blue"])
    assert validate(cn.net) == []
    fams = [g.oracle.family for g in cn.groups()]
    assert fams.count("GaussianMacLog") == 2


def test_reciprocal_gaussian_pair_is_bidirected():
    cn = compile_network(mac_bc_pair(), reciprocal=True)
    assert is_bidirected(cn.net, cn.tau)


def test_reciprocal_rejects_mismatched_gains():
    with pytest.raises(InvalidInputError, match="reciprocity impossible"):
        compile_network(mac_bc_pair((1.0, 0.6)), reciprocal=True)


def test_single_mac_min_cut_equals_full_set_value():
    wn = WirelessNetwork((GaussianMAC("m", "v", ("u1", "u2"), (1.0, 1.0), 1.0),))
    cn = compile_network(wn)
    srcs = [v for v in cn.net.nodes if not v.startswith("v@")]
    tr = TrafficPattern.x_traffic(srcs, [v for v in cn.net.nodes if v.startswith("v@")])
    aug, uni = add_super_source_sink(cn.net, tr)
    assert min_cut(aug, uni).value == pytest.approx(math.log2(3), abs=1e-9)


def test_snapshot_single_edge_flow_equals_rate():
    wn = WirelessNetwork((FadingX("x", ("a",), ("b",), power=1.0, fading=PM1),), mode="snapshot")
    cn = compile_network(wn)
    assert [e.id for e in cn.net.edges] == ["a>b"]
    r = 0.5 * PM1.capacity(2.0)
    assert cn.net.oracle("a", "out")(["a>b"]) == pytest.approx(r)
    assert cn.net.oracle("b", "in")(["a>b"]) == pytest.approx(r)
    sol = max_concurrent_flow(cn.net, TrafficPattern.unicast([("a", "b")]))
    assert sol.lam == pytest.approx(r, abs=1e-9)


def test_snapshot_rejects_non_x_channels():
    with pytest.raises(InvalidInputError):
        compile_network(mac_bc_pair(), mode="snapshot")


@pytest.mark.parametrize("kind", ["FadingX", "FadingLdX", "FixedXdof"])
def test_reciprocal_x_channels_are_bidirected(kind):
    cls = {"FadingX": FadingX, "FadingLdX": FadingLdX, "FixedXdof": FixedXdof}[kind]
    ch = cls("x", ("s1", "s2"), ("t1", "t2"))
    for mode in ("color", "snapshot"):
        cn = compile_network(WirelessNetwork((ch,)), mode=mode, reciprocal=True)
        assert is_bidirected(cn.net, cn.tau)


def test_reciprocal_lindet_pair_is_bidirected():
    H = [[[1, 0, 1]], [[0, 1, 1]]]
    wn = WirelessNetwork((
        LinDetBC("b", "v", ("u1", "u2"), H, 2, color="c"),
        LinDetMAC("m", "v", ("u1", "u2"), [np.array(h).T for h in H], 2, color="c"),
    ))
    cn = compile_network(wn, reciprocal=True)
    assert is_bidirected(cn.net, cn.tau)


def test_reciprocal_erasure_requires_feedback():
    wn = WirelessNetwork((ErasureBCFB("e1", "s", ("a", "b"), 0.5, feedback=False),
                          ErasureBCFB("e2", "a", ("c",), 0.5)))
    with pytest.raises(InvalidInputError, match="e1"):
        compile_network(wn, reciprocal=True)
    ok = compile_network(WirelessNetwork((ErasureBCFB("e2", "s", ("a", "b"), 0.5),)),
                         reciprocal=True)
    assert is_bidirected(ok.net, ok.tau)


def test_loss_factors_by_kind():
    cn = compile_network(WirelessNetwork((
        GaussianMAC("g", "v", ("u1", "u2", "u3"), (1, 1, 1), 1.0, color="a"),
        LinDetBC("l", "v", ("u1",), [[[1]]], 2, color="b"),
        ErasureBCFB("e", "v", ("u1", "u2"), 0.5, color="c"),
        DelayedCsitBC("d", "v", 3, ("u1", "u2", "u3"), color="d"),
        FixedXdof("x", ("p",), ("q",), color="f"),
    )))
    f = {c.id: (c.power_scale, c.rate_scale) for c in cn.channels}
    assert f["g"] == (3, 1)
    assert f["l"] == (1, 1)
    assert f["e"] == (1, pytest.approx(4 / 3))
    assert f["d"] == (1, pytest.approx(11 / 6))
    assert f["x"] == (1, 2)


def test_fading_x_loss_factor():
    ch = FadingX("x", ("s1", "s2"), ("t1",), fading=RayleighUnitVariance())
    (cc,) = compile_network(WirelessNetwork((ch,))).channels
    assert cc.power_scale == pytest.approx(ch.fading.b * 2 ** 3)
    assert cc.rate_scale == 2


def test_cut_factor_report_lindet_exact():
    H = [[[1, 0]], [[0, 1]]]
    cn = compile_network(WirelessNetwork((LinDetBC("b", "v", ("u1", "u2"), H, 2),)))
    # an uncolored channel takes its own id as color
    rep = wireless_cut_factor_report(cn, {"v@b"})
    assert (rep.power_scale, rep.rate_scale) == (1, 1)
    assert rep.poly_cut == pytest.approx(2.0) and rep.implied == pytest.approx(2.0)
    assert rep.holds


def test_cut_factor_report_equal_gain_mac():
    cn = compile_network(WirelessNetwork((
        GaussianMAC("m", "v", ("u1", "u2"), (1, 1), 1.0, color="m"),)))
    rep = wireless_cut_factor_report(cn, {"u1@m", "u2@m"})
    assert rep.poly_cut == pytest.approx(math.log2(3))
    assert rep.implied == pytest.approx(rep.poly_cut, abs=1e-9)
    assert rep.power_scale == 2 and rep.holds


def test_cut_factor_report_erasure_rate_scale():
    cn = compile_network(WirelessNetwork((ErasureBCFB("e", "s", ("a", "b"), 0.5, color="c"),)))
    rep = wireless_cut_factor_report(cn, {"s@c"})
    assert rep.rate_scale == pytest.approx(harmonic_gap_factor(2, 0.5))
    assert rep.rate_scale == pytest.approx(4 / 3)
    assert rep.holds


def test_channel_records_round_trip():
    chans = [
        GaussianMAC("m", "v", ("u1",), (1.0,), 1.0),
        LinDetMAC("l", "v", ("u1", "u2"), [[[1], [0]], [[0], [1]]], 3),
        ErasureBCFB("e", "s", ("a",), 0.2, feedback=False),
        FadingX("x", ("a",), ("b",), fading=PM1),
        DelayedCsitBC("d", "s", 2, ("a", "b"), (1, 2)),
    ]
    for ch in chans:
        back = channel_from_record(channel_to_record(ch))
        assert channel_to_record(back) == channel_to_record(ch)
    with pytest.raises(InvalidInputError):
        channel_from_record({"kind": "Nope"})


def test_wireless_record_snapshot_keyword():
    wn = wireless_from_record({"schemaVersion": 1, "coloring": "snapshot", "channels": [
        {"kind": "FixedXdof", "id": "x", "sources": ["a"], "sinks": ["b"]}]})
    assert wn.mode == "snapshot"
