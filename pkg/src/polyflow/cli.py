"""Command-line interface: ``polyflow <command> [options]``.

Commands read JSON inputs, write deterministic JSON reports plus a
``manifest.json`` into ``--out`` and exit with

====  =====================================
0     success
1     validation failure (or failed checks)
2     parse error
3     size cap exceeded
4     LP solver failure
====  =====================================
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

import numpy as np

from . import channels, verify
from .cutset import VERTEX_CAP, flow_cut_gap, min_cut
from .errors import InvalidInputError, ParseError, PolyflowError, SizeCapError, SolverError
from .flowsolve import DEGREE_CAP, FlowProblem, check_flow
from .io import content_hash, dumps, read_json, write_json
from .netmodel import (
    add_super_source_sink, is_bidirected, net_from_record, net_to_record,
    traffic_from_record, validate,
)
from .polymatroid import EXHAUSTIVE_CAP

EXIT_OK, EXIT_INVALID, EXIT_PARSE, EXIT_CAP, EXIT_SOLVER = range(5)


def tool_version() -> str:
    try:
        return version("polyflow")
    except PackageNotFoundError:
        return "0+unknown"


class Report:
    """Collects output files and writes the manifest at the end."""

    def __init__(self, args, input_hash):
        self.args = args
        self.out = Path(args.out)
        self.input_hash = input_hash
        self.files = []
        self.summary = {}
        self.t0 = time.perf_counter()

    def write(self, name, results):
        rec = {"schemaVersion": 1, "command": self.args.command, "seed": self.args.seed,
               "inputHash": self.input_hash, "results": results}
        write_json(self.out / name, rec)
        self.files.append(name)

    def finish(self):
        write_json(self.out / "manifest.json", {
            "tool": "polyflow", "version": tool_version(), "command": self.args.command,
            "argv": sys.argv[1:], "seed": self.args.seed, "inputHash": self.input_hash,
            "wallTime": time.perf_counter() - self.t0, "summary": self.summary,
            "files": self.files})


def _load_net(path):
    rec = read_json(path)
    net, traffic, tau = net_from_record(rec)
    return net, traffic, tau


def _need_traffic(traffic):
    if traffic is None:
        raise InvalidInputError("input has no \"traffic\" entry")
    return traffic


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    net, traffic, tau = _load_net(args.path)
    issues = validate(net, deep=args.deep, cap=EXHAUSTIVE_CAP)
    notes = [m for m in issues if m.startswith("deep check skipped")]
    problems = [m for m in issues if m not in notes]
    if traffic is not None:
        try:
            traffic.check_endpoints(net)
        except InvalidInputError as exc:
            problems.append(f"traffic: {exc}")
    if tau is not None:
        try:
            tau.check(net)
        except InvalidInputError as exc:
            problems.append(f"tau: {exc}")
        if not problems and args.deep and not is_bidirected(net, tau):
            problems.append("tau: network is not bidirected under the given reversal map")
    for m in notes:
        print(f"note: {m}")
    for m in problems:
        print(f"error: {m}")
    if not problems:
        print(f"ok: {len(net.nodes)} nodes, {len(net.edges)} edges")
    return EXIT_INVALID if problems else EXIT_OK


def cmd_flow(args) -> int:
    net, traffic, _ = _load_net(args.path)
    traffic = _need_traffic(traffic)
    P = FlowProblem(net, traffic, degree_cap=args.degree_cap, lazy=args.lazy)
    if args.weights:
        sol = P.weighted([float(w) for w in args.weights.split(",")])
    else:
        sol = P.concurrent()
    bad = check_flow(net, traffic, sol, tol=max(args.tolerance, 1e-7))
    res = {"lambda": None if math.isnan(sol.lam) else sol.lam,
           "rates": list(sol.rates), "objective": sol.objective, "dual": sol.dual_value,
           "flows": [{"edge": e, "commodity": i, "value": v}
                     for (e, i), v in sorted(sol.flows.items(), key=lambda t: (str(t[0][0]), t[0][1]))],
           "lp": {"constraints": sol.stats.constraints, "variables": sol.stats.variables,
                  "rounds": sol.stats.rounds},
           "recheck": bad}
    rep = Report(args, content_hash(args.path))
    rep.write("flow.json", res)
    rep.summary = {"lambda": res["lambda"], "objective": sol.objective}
    rep.finish()
    print(f"lambda = {sol.lam:.9g}" if not math.isnan(sol.lam)
          else f"objective = {sol.objective:.9g}")
    return EXIT_INVALID if bad else EXIT_OK


def cmd_cut(args) -> int:
    net, traffic, _ = _load_net(args.path)
    traffic = _need_traffic(traffic)
    rep = Report(args, content_hash(args.path))
    if args.super_st:
        aug, uni = add_super_source_sink(net, traffic)
        region = min_cut(aug, uni, vertex_cap=args.vertex_cap + 2)
        flow_sum = FlowProblem(net, traffic, degree_cap=args.degree_cap).support(
            np.ones(traffic.k))
        res = {"sumRateCut": region.value, "sumRateFlow": flow_sum,
               "equal": abs(region.value - flow_sum) <= args.tolerance,
               "region": region.to_record()}
        rep.summary = {"sumRateCut": region.value, "sumRateFlow": flow_sum}
        print(f"sum-rate cut = {region.value:.9g}, sum-rate flow = {flow_sum:.9g}")
    else:
        region = min_cut(net, traffic, vertex_cap=args.vertex_cap)
        res = region.to_record()
        rep.summary = {"minCut": region.value, "bounds": len(region.bounds)}
        print(f"min cut = {region.value:.9g} over {len(region.bounds)} separated sets")
    rep.write("cuts.json", res)
    rep.finish()
    return EXIT_OK


def cmd_gap(args) -> int:
    net, traffic, _ = _load_net(args.path)
    traffic = _need_traffic(traffic)
    P = FlowProblem(net, traffic, degree_cap=args.degree_cap)
    g = flow_cut_gap(net, traffic, n_random=args.n_random, seed=args.seed, problem=P,
                     tol=args.tolerance, vertex_cap=args.vertex_cap)
    rep = Report(args, content_hash(args.path))
    rep.write("gap.json", g.to_record())
    rep.summary = {"gap": g.gap}
    rep.finish()
    print(f"gap = {g.gap:.9g} over {len(g.directions)} directions")
    return EXIT_OK


def cmd_compile(args) -> int:
    rec = read_json(args.path)
    wn = channels.wireless_from_record(rec)
    c = channels.compile_network(wn, mode=args.mode,
                                 reciprocal=True if args.reciprocal else None)
    traffic = traffic_from_record(rec["traffic"]) if rec.get("traffic") else None
    out = net_to_record(c.net, traffic, c.tau)
    out["channels"] = [cc.to_record() for cc in c.channels]
    out["mode"] = c.mode
    rep = Report(args, content_hash(args.path))
    write_json(rep.out / "compiled.json", out)
    rep.files.append("compiled.json")
    rep.summary = {"nodes": len(c.net.nodes), "edges": len(c.net.edges),
                   "lossFactors": {cc.id: [cc.power_scale, cc.rate_scale] for cc in c.channels}}
    rep.finish()
    issues = [m for m in validate(c.net) if not m.startswith("deep check skipped")]
    print(f"compiled {len(c.channels)} channels: {len(c.net.nodes)} vertices, "
          f"{len(c.net.edges)} edges -> {rep.out / 'compiled.json'}")
    for m in issues:
        print(f"error: {m}")
    return EXIT_INVALID if issues else EXIT_OK


def _verify_hash(suite, seed):
    key = json.dumps({"suite": suite, "seed": seed, "version": tool_version()}, sort_keys=True)
    return hashlib.sha256(key.encode()).hexdigest()


def cmd_verify(args) -> int:
    if args.compare:
        a, b = (read_json(p) for p in args.compare)
        if a.get("inputHash") != b.get("inputHash"):
            print("error: reports have different input hashes; refusing to compare")
            return EXIT_INVALID
        same = dumps(a.get("results")) == dumps(b.get("results"))
        print("identical" if same else "results differ")
        return EXIT_OK if same else EXIT_INVALID
    try:
        res = verify.run(args.suite, args.seed)
    except KeyError as exc:
        raise InvalidInputError(exc.args[0]) from None
    rep = Report(args, _verify_hash(args.suite, args.seed))
    rep.write("verify.json", res.table())
    rep.summary = {"rows": len(res.rows), "failures": res.failures,
                   "timings": res.timings}
    rep.finish()
    width = max(len(f"{r.suite}/{r.check}") for r in res.rows)
    for r in res.rows:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {f'{r.suite}/{r.check}':<{width}}  n={r.instances:<5d} "
              f"fail={r.failures:<3d} worst={r.worst:.3g} tol={r.tolerance:.3g}")
    print(f"{len(res.rows) - res.failures}/{len(res.rows)} checks passed")
    return EXIT_OK if res.failures == 0 else EXIT_INVALID


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    common.add_argument("--tolerance", type=float, default=1e-6,
                        help="tolerance for LP comparisons")
    common.add_argument("--degree-cap", type=int, default=DEGREE_CAP,
                        help="largest node degree the flow LP enumerates")
    common.add_argument("--vertex-cap", type=int, default=VERTEX_CAP,
                        help="largest vertex count for cut enumeration")
    common.add_argument("--out", default="polyflow-out", help="report directory")

    p = argparse.ArgumentParser(prog="polyflow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a network file")
    s.add_argument("path")
    s.add_argument("--deep", action="store_true", help="also check oracle laws")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("flow", parents=[common], help="max concurrent or weighted flow")
    s.add_argument("path")
    s.add_argument("--weights", help="comma-separated weights for a weighted sum-rate")
    s.add_argument("--lazy", action="store_true", help="separate capacity rows lazily")
    s.set_defaults(func=cmd_flow)

    s = sub.add_parser("cut", parents=[common], help="enumerate the cut-set region")
    s.add_argument("path")
    s.add_argument("--super-st", action="store_true",
                   help="X traffic: sum-rate cut through a super source and sink")
    s.set_defaults(func=cmd_cut)

    s = sub.add_parser("gap", parents=[common], help="estimate the flow-cut gap")
    s.add_argument("path")
    s.add_argument("--n-random", type=int, default=100, help="random directions")
    s.set_defaults(func=cmd_gap)

    s = sub.add_parser("compile", parents=[common], help="wireless channels to a network")
    s.add_argument("path")
    s.add_argument("--reciprocal", action="store_true", help="emit a bidirected network")
    s.add_argument("--mode", choices=("color", "snapshot", "antenna"), default=None)
    s.set_defaults(func=cmd_compile)

    s = sub.add_parser("verify", parents=[common], help="run property suites")
    s.add_argument("suite", nargs="?", default="all",
                   help=f"one of {', '.join(verify.SUITES)} or all")
    s.add_argument("--compare", nargs=2, metavar="REPORT",
                   help="compare two reports instead of running suites")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SizeCapError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (InvalidInputError, PolyflowError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
