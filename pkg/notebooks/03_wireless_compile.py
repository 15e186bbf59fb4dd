"""
From wireless channels to a polymatroidal network
=================================================

Channel descriptions are compiled into node constraints.  Each channel
records the power and rate factors by which its constraint can fall short
of the true cut value.
"""

from polyflow.channels import (
    DiscreteSymmetric, ErasureBCFB, FadingX, GaussianBC, GaussianMAC, RayleighUnitVariance,
    WirelessNetwork, compile_network, delayed_csit_bc_dof, wireless_cut_factor_report,
)
from polyflow.flowsolve import max_concurrent_flow
from polyflow.netmodel import TrafficPattern, is_bidirected

###############################################################################
# A MAC on one color and a BC on another share the node ``v``.  The node is
# split into one vertex per color joined by free links.
wn = WirelessNetwork((
    GaussianMAC("mac", "v", ("u1", "u2"), (1.0, 0.8), 1.0, color="red"),
    GaussianBC("bc", "v", ("w1", "w2"), (0.9, 1.2), 1.0, color="blue"),
))
cn = compile_network(wn)
print("vertices:", cn.net.nodes)
for c in cn.channels:
    print(c.id, "power factor", c.power_scale, "rate factor", c.rate_scale)

tr = TrafficPattern.unicast([("u1@red", "w1@blue"), ("u2@red", "w2@blue")])
print("lambda =", round(max_concurrent_flow(cn.net, tr).lam, 5))

###############################################################################
# A MAC paired with a BC of the same gains on the same color compiles to a
# bidirected network.
pair = WirelessNetwork((
    GaussianMAC("m", "v", ("u1", "u2"), (1.0, 0.5), 2.0, color="c"),
    GaussianBC("b", "v", ("u1", "u2"), (1.0, 0.5), 2.0, color="c"),
))
rc = compile_network(pair, reciprocal=True)
print("bidirected:", is_bidirected(rc.net, rc.tau))

###############################################################################
# The polymatroidal cut of an equal-gain MAC meets the general-input bound
# once the power is divided by the number of users.
mac = compile_network(WirelessNetwork((GaussianMAC("m", "v", ("u1", "u2"), (1, 1), 1.0, color="m"),)))
rep = wireless_cut_factor_report(mac, {"u1@m", "u2@m"})
print("poly cut", round(rep.poly_cut, 4), "implied", round(rep.implied, 4), "holds", rep.holds)

###############################################################################
# Erasure broadcast with acknowledgements loses at most the harmonic factor.
er = compile_network(WirelessNetwork((ErasureBCFB("e", "s", ("a", "b"), 0.5, color="c"),)))
print("erasure rate factor", round(wireless_cut_factor_report(er, {"s@c"}).rate_scale, 6))

###############################################################################
# Fading constants.  With h = +-1 the constant is exactly one.  For Rayleigh
# fading it is exp(Euler gamma).
pm = DiscreteSymmetric((1.0, -1.0), (0.5, 0.5))
ray = RayleighUnitVariance()
print("a(+-1) =", pm.a, " a(Rayleigh) =", round(ray.a, 5), " MC:", round(ray.a_monte_carlo(), 5))
x = compile_network(WirelessNetwork((FadingX("x", ("a",), ("b",), fading=pm),), mode="snapshot"))
print("snapshot rate", round(x.net.oracle("a", "out")(["a>b"]), 5))

###############################################################################
# Delayed channel state at a three-antenna transmitter.
reg = delayed_csit_bc_dof(3, [1, 1, 1])
print("per user", round(reg.oracle([0]), 5), "sum", round(reg.sum_bound, 5), "factor", round(reg.factor, 5))
