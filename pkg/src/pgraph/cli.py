"""``pgraph`` command line.

Every subcommand prints one JSON document (``"schema": "pgraph-report-1"``)
or, with ``--csv``, plot-ready CSV.  Exit codes: 0 success, 2 when a
definitive label was requested but the answer is inconclusive, 1 on error
(with a one-line ``error: CODE: message`` on stderr).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .capacity import (
    INCONCLUSIVE,
    ClassifyPolicy,
    InconclusiveError,
    ParabolicSignal,
    capacity,
    capacity_limit,
    classify,
    greens_function,
    harmonic_potential,
)
from .graph import (
    GraphError,
    VertexFunction,
    WeightedGraph,
    ball,
    dump_graph,
    greens_formula_residual,
    load_graph,
    random_graph,
    vertex_key,
)
from .khasminskii import NotParabolicError, khasminskii_potential
from .metrics import flow_greens_residual, gradient_flow
from .models import FAMILIES, FamilySpec, generate, profile_from_json, profile_of, radial_green
from .solvers import ObstacleProblem, solve_obstacle
from .suite import SuiteConfig, SuiteContradiction, run_suite

__all__ = ["main", "build_parser", "SCHEMA"]

SCHEMA = "pgraph-report-1"


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# argument handling

class _Parser(argparse.ArgumentParser):
    """Turns usage errors into the one-line error format instead of exiting."""

    def error(self, message):
        raise CliError("USAGE", message)


def _target_args(sp: argparse.ArgumentParser):
    g = sp.add_argument_group("target")
    g.add_argument("--graph", type=Path, help="pgraph v1 file")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--profile", type=Path, help="radial profile JSON")
    g.add_argument("--d", type=int, help="tree branching / lattice dimension")
    g.add_argument("--s", help="anti-tree sphere sizes (token)")
    g.add_argument("--b", help="line weights (token)")
    g.add_argument("--w", help="star spoke weights (token)")
    g.add_argument("--rim", help="wheel rim weights (token)")


def _common_args(sp: argparse.ArgumentParser):
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--stages", type=int, default=12)
    sp.add_argument("--truncation", type=int, default=None)
    sp.add_argument("--tol", type=float, default=1e-10)
    fmt = sp.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")
    sp.set_defaults(fmt="json")
    sp.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pgraph", description="p-potential theory on weighted graphs")
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        sp = sub.add_parser(name, help=help_)
        _target_args(sp)
        _common_args(sp)
        return sp

    cmd("gen", "emit a truncation in pgraph v1 format")
    cmd("classify", "parabolic/hyperbolic verdict with evidence")
    sp = cmd("capacity", "capacity of K in V (or along the exhaustion)")
    sp.add_argument("--K", default=None, help="comma separated vertex ids")
    sp.add_argument("--V", default=None, help="comma separated vertex ids")
    sp = cmd("potential", "equilibrium potentials along the exhaustion")
    sp.add_argument("--o", default=None)
    sp = cmd("green", "Green's function value")
    sp.add_argument("--r", type=int, default=None, help="radius (model families)")
    sp.add_argument("--x", default=None, help="vertex id (generic estimate)")
    sp.add_argument("--o", default=None)
    sp = cmd("obstacle", "solve an obstacle problem on a finite graph")
    sp.add_argument("--region", required=True, help="comma separated free vertices")
    sp.add_argument("--obstacle", default="", help="id=value pairs; -inf elsewhere")
    sp.add_argument("--boundary", default="", help="id=value pairs; 0 elsewhere")
    sp = cmd("khasminskii", "Khas'minskii potential")
    sp.add_argument("--K", default=None)
    cmd("suite", "run every characterization and cross-check")
    sp = cmd("check", "identity batteries on fuzzed graphs")
    sp.add_argument("--cases", type=int, default=200)
    return ap


def _parse_id(tok: str):
    tok = tok.strip()
    try:
        return int(tok)
    except ValueError:
        pass
    if tok.startswith("(") and tok.endswith(")"):
        inner = tok[1:-1].strip()
        return tuple(int(t) for t in inner.split() if t) if inner else ()
    return tok


def _ids(text: str | None):
    if text is None:
        return None
    return [_parse_id(t) for t in text.split(",") if t.strip()] if text.strip() else []


def _pairs(text: str) -> dict:
    out = {}
    for item in filter(None, (t.strip() for t in text.split(","))):
        if "=" not in item:
            raise CliError("BAD_ARGUMENT", f"expected id=value, got {item!r}")
        k, v = item.split("=", 1)
        out[_parse_id(k)] = float(v)
    return out


def _target(args):
    if args.graph is not None:
        try:
            text = args.graph.read_text()
        except OSError as exc:
            raise CliError("FILE_ERROR", str(exc)) from None
        return load_graph(text)
    if args.family is not None:
        prm = {k: getattr(args, k) for k in ("d", "s", "b", "w", "rim")}
        try:
            return generate(FamilySpec(args.family, {k: v for k, v in prm.items() if v is not None}))
        except ValueError as exc:
            raise CliError("BAD_FAMILY", str(exc)) from None
    raise CliError("NO_TARGET", "give --graph FILE or --family NAME")


def _jid(v):
    return list(v) if isinstance(v, tuple) else v


def _fn_json(vf: VertexFunction, vertices) -> list:
    return [[_jid(v), vf(v)] for v in sorted(vertices, key=vertex_key)]


def _emit(out: dict, stream) -> None:
    out = {"schema": SCHEMA, **out}
    stream.write(json.dumps(_finite(out), sort_keys=True) + "\n")


def _finite(obj):
    if isinstance(obj, dict):
        return {str(k): _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# ---------------------------------------------------------------------------
# subcommands

def _gen(args, out):
    G = _target(args)
    if isinstance(G, WeightedGraph):
        out.write(dump_graph(G))
        return 0
    n = args.truncation if args.truncation is not None else 3
    T = G.truncate(G.stage(n))
    header = f"{G.name} stage {n}; boundary vertices keep only their materialised edges"
    out.write(dump_graph(T, header=header))
    return 0


def _classify(args, out):
    if args.profile is not None:
        prof = profile_from_json(json.loads(args.profile.read_text()))
        from .models import area_series_test
        res = area_series_test(prof, args.p)
        _emit({"command": "classify", "p": args.p, "label": res.label, "series": res.to_json()}, out)
        return 2 if res.verdict == "inconclusive" else 0
    G = _target(args)
    v = classify(G, None, args.p, ClassifyPolicy(stages=args.stages, tol=args.tol))
    if args.fmt == "csv":
        caps = _caps_from(v)
        out.write("n,cap\n" + "".join(f"{n},{c!r}\n" for n, c in caps))
    else:
        _emit({"command": "classify", "target": getattr(G, "name", "graph"), "p": args.p,
               "stages": args.stages, "verdict": v.to_json()}, out)
    return 2 if v.label == INCONCLUSIVE else 0


def _caps_from(v) -> list:
    for e in v.evidence:
        d = e.details
        if "radial_capacities" in d:
            return d["radial_capacities"]
        if "caps" in d:
            return list(enumerate(d["caps"]))
    return []


def _default_region(G: WeightedGraph, K) -> list:
    dist = ball(G, K, G.n)
    ecc = max(dist.values())
    return sorted((v for v, d in dist.items() if d <= max(ecc - 1, 0)), key=vertex_key)


def _capacity(args, out):
    G = _target(args)
    K = _ids(args.K) or [G.root if G.root is not None else G.vertices[0]]
    if isinstance(G, WeightedGraph) or args.V is not None:
        if isinstance(G, WeightedGraph):
            missing = [k for k in K if k not in G.index]
            if missing:
                raise CliError("UNKNOWN_VERTEX", f"vertex {missing[0]!r} not in graph")
        V = _ids(args.V) if args.V is not None else _default_region(G, K)
        res = capacity(G, K, V, args.p, args.tol)
        if args.fmt == "csv":
            out.write("cap\n" + f"{res.value!r}\n")
        else:
            _emit({"command": "capacity", "cap": res.value, "p": args.p, "K": [_jid(k) for k in K],
                   "V": [_jid(v) for v in res.region], "converged": res.converged,
                   "residual": res.residual}, out)
        return 0
    seq = capacity_limit(G, K, args.p, args.stages, args.tol)
    if args.fmt == "csv":
        out.write("\n".join(seq.csv_rows()) + "\n")
    else:
        _emit({"command": "capacity", "cap": seq.caps[-1], "sequence": seq.to_json()}, out)
    return 0


def _potential(args, out):
    G = _target(args)
    o = _parse_id(args.o) if args.o is not None else None
    seq = harmonic_potential(G, o, args.p, args.stages, args.tol)
    if args.fmt == "csv":
        out.write("\n".join(seq.csv_rows()) + "\n")
        return 0
    last = seq.stages[-1]
    _emit({"command": "potential", "sequence": seq.to_json(),
           "u": _fn_json(last.u, seq.truncation.vertices)}, out)
    return 0


def _green(args, out):
    if args.profile is not None:
        prof = profile_from_json(json.loads(args.profile.read_text()))
    else:
        G = _target(args)
        spec = getattr(G, "spec", None)
        prof = profile_of(spec) if spec is not None else None
    if prof is not None:
        r = args.r if args.r is not None else 0
        gv = radial_green(prof, args.p, r, args.truncation)
        _emit({"command": "green", "r": r, "p": args.p, "g": gv.value, "partial": gv.partial,
               "tail": gv.tail, "remainder": gv.remainder, "exact": gv.exact}, out)
        return 0
    o = _parse_id(args.o) if args.o is not None else None
    est = greens_function(G, o, args.p, args.stages, args.tol)
    body = {"command": "green", "p": args.p, "estimate": est.to_json()}
    if args.x is not None:
        body["g"] = est(_parse_id(args.x))
    else:
        body["values"] = _fn_json(est.g, est.g.support)
    _emit(body, out)
    return 0


def _obstacle(args, out):
    G = _target(args)
    if not isinstance(G, WeightedGraph):
        raise CliError("NEEDS_FINITE_GRAPH", "obstacle problems need --graph")
    region = _ids(args.region)
    psi = VertexFunction(_pairs(args.obstacle), -math.inf)
    theta = VertexFunction(_pairs(args.boundary), 0.0)
    rep = solve_obstacle(ObstacleProblem(G, region, psi, theta, args.p), tol=args.tol)
    _emit({"command": "obstacle", "converged": rep.converged, "residual": rep.residual,
           "energy": rep.energy, "iterations": rep.iterations,
           "u": _fn_json(rep.solution, G.vertices)}, out)
    return 0 if rep.converged else 1


def _khasminskii(args, out):
    G = _target(args)
    K = _ids(args.K)
    trunc = args.truncation if args.truncation is not None else 64
    stages = args.stages if args.stages is not None else 4
    run = khasminskii_potential(G, K, args.p, stages, trunc, args.tol)
    if args.fmt == "csv":
        radius = getattr(G, "radius", None)
        if radius is None:
            raise CliError("NOT_RADIAL", "CSV output needs a radial family")
        out.write("\n".join(run.radial_rows(radius)) + "\n")
    else:
        _emit({"command": "khasminskii", "run": run.to_json()}, out)
    return 0 if run.complete else 2


def _suite(args, out):
    G = _target(args)
    cfg = SuiteConfig(stages=min(args.stages, 10), seed=args.seed)
    rep = run_suite(G, args.p, cfg)
    _emit({"command": "suite", "report": rep.to_json()}, out)
    return 0


def _check(args, out):
    rng = np.random.default_rng(args.seed)
    worst_g, worst_f = 0.0, 0.0
    for case in range(args.cases):
        G = random_graph(rng, int(rng.integers(2, 31)))
        p = float(rng.choice([1.3, 2.0, 3.5]))
        f = VertexFunction.from_array(G, rng.uniform(-2, 2, G.n), sparse=False)
        V = [v for v in G.vertices if rng.random() < 0.6] or [G.vertices[0]]
        phi = VertexFunction({v: float(rng.uniform(-2, 2)) for v in V}, 0.0)
        worst_g = max(worst_g, abs(greens_formula_residual(G, f, phi, V, p)))
        worst_f = max(worst_f, abs(flow_greens_residual(G, gradient_flow(G, f, p), phi)))
    ok = worst_g < 1e-10 and worst_f < 1e-10
    _emit({"command": "check", "cases": args.cases, "seed": args.seed,
           "greens_formula_max": worst_g, "flow_greens_max": worst_f, "pass": ok}, out)
    return 0 if ok else 1


_COMMANDS = {"gen": _gen, "classify": _classify, "capacity": _capacity, "potential": _potential,
             "green": _green, "obstacle": _obstacle, "khasminskii": _khasminskii, "suite": _suite,
             "check": _check}


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args, stdout)
    except CliError as exc:
        stderr.write(f"error: {exc.code}: {exc}\n")
        return 1
    except ParabolicSignal as exc:
        stderr.write(f"error: PARABOLIC_SIGNAL: {exc}\n")
        return 1
    except InconclusiveError as exc:
        stderr.write(f"error: INCONCLUSIVE: {exc}\n")
        return 2
    except NotParabolicError as exc:
        stderr.write(f"error: NOT_PARABOLIC: {exc}\n")
        return 1
    except SuiteContradiction as exc:
        stderr.write(f"error: CONTRADICTION: {exc}\n")
        return 1
    except (GraphError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        code = type(exc).__name__.upper()
        stderr.write(f"error: {code}: {exc}\n")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
