"""Run every applicable parabolicity test on one target and cross-check the answers.

Each section yields a label (``parabolic``, ``hyperbolic`` or ``None`` for
diagnostics without a definitive answer).  Two sections asserting different
definitive labels is a contradiction and raises SuiteContradiction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .capacity import (
    HYPERBOLIC,
    INCONCLUSIVE,
    PARABOLIC,
    ClassifyPolicy,
    NoHardyWeight,
    capacity_limit,
    classify,
    hardy_gap,
    hardy_weight,
    liouville_probe,
    poincare_constant,
    strong_subadditivity_search,
    _capacity_rule,
)
from .graph import GeneratedGraph, GraphError, VertexFunction, laplacian_values, vertex_key
from .khasminskii import ahlfors_check, khasminskii_potential, weak_max_check
from .metrics import knr_certificate
from .models import (
    InconclusiveError,
    area_series_test,
    profile_of,
    radial_green_values,
    radial_null_sequence,
)
from .solvers import superharmonic_report

__all__ = ["SuiteConfig", "SuiteReport", "SuiteContradiction", "run_suite"]


class SuiteContradiction(AssertionError):
    """Two certificates assert different definitive labels."""


@dataclass
class SuiteConfig:
    stages: int = 12
    threshold: float = 1e-3
    khasminskii_truncation: int = 64
    khasminskii_stages: int = 2
    ssa_trials: int = 10
    seed: int = 0
    strict: bool = True


@dataclass
class SuiteReport:
    target: str
    p: float
    sections: dict = field(default_factory=dict)
    agreement: dict = field(default_factory=dict)
    consistent: bool = True
    verdict: Any = None
    expected: str | None = None

    def labels(self) -> dict:
        return {k: v.get("label") for k, v in self.sections.items()}

    def to_json(self) -> dict:
        return {"target": self.target, "p": self.p, "sections": self.sections,
                "agreement": self.agreement, "consistent": self.consistent,
                "verdict": self.verdict.to_json() if self.verdict is not None else None,
                "expected": self.expected}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run_suite(G, p: float, config: SuiteConfig | None = None) -> SuiteReport:
    """Execute the applicable characterizations and record their agreement."""
    cfg = config or SuiteConfig()
    name = getattr(G, "name", "graph")
    verdict = classify(G, None, p, ClassifyPolicy(stages=max(cfg.stages, 12), threshold=cfg.threshold))
    rep = SuiteReport(name, float(p), verdict=verdict, expected=verdict.expected)
    S = rep.sections
    S["classify"] = {"label": verdict.label if verdict.label != INCONCLUSIVE else None,
                     "evidence": [e.kind for e in verdict.evidence], "notes": verdict.notes}
    spec = getattr(G, "spec", None)
    profile = profile_of(spec) if spec is not None else None
    root = G.root if G.root is not None else G.vertices[0]

    if profile is not None:
        series = area_series_test(profile, p)
        S["area_series"] = {"label": series.label if series.verdict != "inconclusive" else None,
                            "note": series.note, "exact": series.exact}

    seq = None
    try:
        seq = capacity_limit(G, None, p, cfg.stages)
        label, cert = _capacity_rule(seq, ClassifyPolicy(stages=cfg.stages, threshold=cfg.threshold))
        caps = seq.caps
        S["capacity_decay"] = {"label": label if label != INCONCLUSIVE else None, "caps": caps,
                               "monotone": seq.monotone_cap, "monotone_u": seq.monotone_u,
                               "strictly_decreasing": all(a > b for a, b in zip(caps, caps[1:])),
                               "extrapolation": seq.extrapolation.to_json()}
        S["null_sequence"] = {"label": PARABOLIC if label == PARABOLIC else None,
                              "source": "capacity minimisers", "energies": caps}
    except GraphError as exc:
        S["capacity_decay"] = {"label": None, "skipped": str(exc)}
    if profile is not None:
        S["null_sequence"] = _radial_null_section(profile, p)

    if verdict.label == HYPERBOLIC and seq is not None:
        S["green"] = _green_section(G, seq, p, profile)
        S["ahlfors"] = _ahlfors_section(G, seq, p)
        try:
            V = seq.stages[min(3, len(seq.stages) - 1)]
            Vset = sorted(V.u.support, key=vertex_key)
            mu = hardy_weight(G, p, [root], [1.0], Vset)
            C = poincare_constant(G, [root], p, Vset)
            T = seq.truncation
            rng = np.random.default_rng(cfg.seed)
            gaps = []
            for _ in range(20):
                vals = {v: float(rng.uniform(-1, 1)) for v in Vset}
                gaps.append(hardy_gap(T, mu, VertexFunction(vals, 0.0), p))
            S["hardy"] = {"label": HYPERBOLIC, "mu_root": mu(root), "poincare": C,
                          "min_gap": min(gaps), "valid": min(gaps) >= -1e-9}
        except NoHardyWeight as exc:
            S["hardy"] = {"label": PARABOLIC, "error": str(exc)}
    elif verdict.label == PARABOLIC:
        S["green"] = {"label": PARABOLIC, "signal": "no Green's function"}
        S["hardy"] = {"label": PARABOLIC, "error": "no Hardy weight exists"}
        S["khasminskii"] = _khasminskii_section(G, p, cfg)
        try:
            probe = liouville_probe(G, p, [4, 8, 16]) if _ball_ok(G) else []
            S["liouville"] = {"label": None, "oscillation": probe,
                              "decreasing": all(a[1] >= b[1] for a, b in zip(probe, probe[1:]))}
        except GraphError as exc:
            S["liouville"] = {"label": None, "skipped": str(exc)}

    try:
        knr = knr_certificate(G, None, p, min(3, cfg.stages))
        S["knr"] = {"label": None, **knr.to_json()}
    except GraphError as exc:
        S["knr"] = {"label": None, "skipped": str(exc)}

    if seq is not None:
        T = seq.truncation
        V = sorted(seq.stages[min(2, len(seq.stages) - 1)].u.support, key=vertex_key)[:8]
        trials = strong_subadditivity_search(T, V, p, cfg.ssa_trials, cfg.seed) if len(V) >= 2 else []
        S["strong_subadditivity"] = {"label": None, "experimental": True, "trials": len(trials),
                                     "max_gap": max((t["gap"] for t in trials), default=None)}

    labels = {k: v.get("label") for k, v in S.items()}
    definitive = {k: v for k, v in labels.items() if v in (PARABOLIC, HYPERBOLIC)}
    rep.agreement = {a: {b: ("n/a" if labels[a] is None or labels[b] is None
                             else "agree" if labels[a] == labels[b] else "disagree")
                         for b in labels} for a in labels}
    rep.consistent = len(set(definitive.values())) <= 1
    rep.sections = _clean(S)
    if not rep.consistent and cfg.strict:
        raise SuiteContradiction(f"contradictory certificates: {definitive}")
    return rep


def _radial_null_section(profile, p) -> dict:
    """Radial minimisers ``e_n``: energies ``c_n^{p-1}`` tend to zero iff the graph is parabolic."""
    ns = [2 ** k for k in range(13)]
    energies = [[n, radial_null_sequence(profile, p, n).energy] for n in ns]
    series = area_series_test(profile, p)
    label = None
    if series.verdict != "inconclusive" and series.exact:
        label = series.label
    limit = 0.0 if label == PARABOLIC else None
    if label == HYPERBOLIC:
        # the energies decrease to the capacity of the root, which is positive
        limit = float(radial_green_values(profile, p, 0)[0]) ** (-(p - 1.0))
    return {"label": label, "source": "radial minimisers", "energies": energies, "limit": limit,
            "decreasing": all(a[1] >= b[1] for a, b in zip(energies, energies[1:]))}


def _ball_ok(G) -> bool:
    if isinstance(G, GeneratedGraph):
        try:
            G.ball(1)
        except GraphError:
            return False
    return True


def _green_section(G, seq, p, profile) -> dict:
    T = seq.truncation
    u = seq.stages[-1].u
    o = seq.K[0]
    flux = float((laplacian_values(T, u, p) * T.m)[T.index[o]])
    c = flux ** (-1.0 / (p - 1.0))
    out = {"label": HYPERBOLIC, "g_root": c, "cap_N": seq.stages[-1].cap,
           "cc_from_g": c ** -(p - 1.0)}
    out["normalisation_ok"] = abs(out["cc_from_g"] - out["cap_N"]) <= 1e-4 * out["cap_N"]
    if profile is not None:
        exact = float(radial_green_values(profile, p, 0)[0])
        out["radial_g_root"] = exact
    if not out["normalisation_ok"]:
        out["label"] = None
    return out


def _ahlfors_section(G, seq, p) -> dict:
    T = seq.truncation
    u_n = seq.stages[-1].u
    o = seq.K[0]
    # 1 - u_N is subharmonic off o, vanishes at o and is positive elsewhere
    vals = {v: 1.0 - u_n(v) for v in T.vertices}
    V = [v for v in T.vertices if v != o]
    try:
        res = ahlfors_check(T, VertexFunction(vals, 1.0), V, p)
    except ValueError as exc:
        return {"label": None, "skipped": str(exc)}
    strict = res.subharmonic and res.sup_boundary < res.sup_closure
    return {"label": None, "sup_closure": res.sup_closure, "sup_boundary": res.sup_boundary,
            "subharmonic": res.subharmonic, "note": "finite-truncation probe; strictness is not a certificate"
            if strict else "equality"}


def _khasminskii_section(G, p, cfg) -> dict:
    if not isinstance(G, GeneratedGraph) or not _ball_ok(G):
        return {"label": None, "skipped": "needs finite balls"}
    try:
        run = khasminskii_potential(G, None, p, cfg.khasminskii_stages, cfg.khasminskii_truncation,
                                    check_class=False)
    except (GraphError, InconclusiveError) as exc:
        return {"label": None, "skipped": str(exc)}
    T = run.graph
    inner = [v for v in T.vertices if v not in run.K and T.index[v] not in T.frontier
             and T.tail[T.index[v]] == 0]
    sh = superharmonic_report(T, run.kappa, inner, p, 1e-8)
    wm = weak_max_check(T, VertexFunction({v: -run.kappa(v) for v in T.vertices}, -run.kappa.default),
                        -0.5, p) if len(T.vertices) > 1 else None
    ok = run.complete and sh.superharmonic
    return {"label": PARABOLIC if ok else None, "complete": run.complete,
            "superharmonic": sh.superharmonic, "stages": [s.j for s in run.stages],
            "weak_max_violation": bool(wm.violation) if wm else None,
            "diagnostic": run.diagnostic}
