"""
Concurrent flow against cut bounds
==================================

Route several commodities through a network whose nodes carry
submodular constraints, then compare with the enumerated cut region.
"""

import numpy as np

from polyflow.cutset import flow_cut_gap, layered_orbits, min_cut
from polyflow.flowsolve import FlowProblem, layered_network, symmetric_layered_flow
from polyflow.fuzz import random_bidirected_net, random_pairs
from polyflow.netmodel import TrafficPattern

###############################################################################
# Two commodities across one internal layer of three relays.  Every relay
# is a unit-capacity node, so two units leave the sources in total.
net, traffic = layered_network(2, [3])
sol = FlowProblem(net, traffic).concurrent()
print("lambda =", round(sol.lam, 6), "rates", np.round(sol.rates, 6))
print("LP duality gap", sol.duality_gap)

###############################################################################
# The cut region holds one bound per set of separated commodities.
region = min_cut(net, traffic)
for s, cert in sorted(region.bounds.items(), key=lambda t: sorted(t[0])):
    print("separates", sorted(s), "bound", round(cert.cost, 6))

###############################################################################
# Relays in the same layer are interchangeable, so only the number chosen
# from each layer matters.  That shrinks the enumeration.
fast = min_cut(net, traffic, orbits=layered_orbits([3]))
print("cuts examined:", region.cuts_examined, "->", fast.cuts_examined)

###############################################################################
# The equal-split routing decides feasibility without an LP.
print("rates (0.5, 0.5):", bool(symmetric_layered_flow([2, 3, 2], [0.5, 0.5])))
print("rates (1.2, 1.0):", bool(symmetric_layered_flow([2, 3, 2], [1.2, 1.0])))

###############################################################################
# On a random bidirected network the gap between flow and cut support
# functions stays close to one.
bnet, tau = random_bidirected_net(6, 3, seed=11)
tr = TrafficPattern.unicast(random_pairs(bnet.nodes, 3, seed=11))
rep = flow_cut_gap(bnet, tr, n_random=20, seed=0)
print("gap estimate", round(rep.gap, 4), "over", len(rep.directions), "directions")
