"""
Submodular capacity oracles
===========================

A node constraint is a set function over the edges it touches.  This walk
through builds a few of them, checks the polymatroid laws and optimises a
linear objective with the greedy rule.
"""

import numpy as np

from polyflow.polymatroid import (
    CutErasure, GaussianMacLog, RankGF, greedy_linear_opt, harmonic_gap_factor,
    is_monotone, is_submodular, lovasz_extension, membership,
)

###############################################################################
# A two-user Gaussian multiple-access constraint with unit gains at P = 1.
# Each user alone gets one bit; together they get log2(3).
f = GaussianMacLog([1.0, 1.0], 1.0)
print("f({0})   =", f([0]))
print("f({0,1}) =", round(f([0, 1]), 4))
print("polymatroid:", is_submodular(f) and is_monotone(f))

###############################################################################
# Membership reports the most violated subset.
r = membership([1.0, 1.0], f)
print("(1, 1) feasible?", bool(r), "violated set", sorted(r.witness), "excess", round(r.excess, 4))

###############################################################################
# The greedy rule sorts weights and takes marginal gains.  It reaches the
# optimum of any non-negative linear objective over the polytope.
x, value = greedy_linear_opt(f, [2.0, 1.0])
print("greedy vertex", np.round(x, 4), "value", round(value, 4))

###############################################################################
# The Lovasz extension agrees with f on indicator vectors and is linear on
# each chain of the sorted order.
print("L(1, 0.5) =", round(lovasz_extension(f, [1.0, 0.5]), 4))

###############################################################################
# Erasure broadcast cut values and the harmonic factor that separates them
# from what a feedback scheme reaches.
g = CutErasure(0.5, 3)
print("erasure cut by size:", [g(list(range(k))) for k in (1, 2, 3)])
print("A(3, 0.5) =", round(harmonic_gap_factor(3, 0.5), 5))

###############################################################################
# Rank over a finite field.  Over GF(3) the rows (1, 2) and (2, 1) are
# parallel, so the pair carries a single symbol.
h = RankGF(3, [[[1, 2]], [[2, 1]]])
print("rank bits:", round(h([0, 1]), 4), "= log2(3)")
