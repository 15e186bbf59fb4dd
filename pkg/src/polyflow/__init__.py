"""Polymatroidal network flow: capacity oracles, flow LPs, cut enumeration and
wireless channel compilation."""

from importlib import resources

from .errors import InvalidInputError, ParseError, PolyflowError, SizeCapError, SolverError
from .netmodel import Commodity, Edge, PolyNet, ReversalMap, TrafficPattern
from .polymatroid import SetFunction, greedy_linear_opt, membership
from .flowsolve import FlowProblem, max_concurrent_flow, max_weighted_sum
from .cutset import cut_cost, flow_cut_gap, min_cut
from .channels import compile_network


def data_path(name: str):
    """Path of a bundled example network (``layered_k2.json`` and friends)."""
    return resources.files(__package__) / "data" / name


__all__ = [
    "InvalidInputError", "ParseError", "PolyflowError", "SizeCapError", "SolverError",
    "Commodity", "Edge", "PolyNet", "ReversalMap", "TrafficPattern",
    "SetFunction", "greedy_linear_opt", "membership",
    "FlowProblem", "max_concurrent_flow", "max_weighted_sum",
    "cut_cost", "flow_cut_gap", "min_cut", "compile_network", "data_path",
]
