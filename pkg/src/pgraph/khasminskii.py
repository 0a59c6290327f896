"""Maximum principles at infinity and Khas'minskiĭ potentials.

A Khas'minskiĭ potential for a finite set ``K`` is a function ``κ >= 0`` that
vanishes on ``K``, is p-superharmonic off ``K`` and tends to infinity.  It is
built stage by stage: ``s_{n+1}`` is the solution of an obstacle problem with
obstacle ``s_n + (f/j) ∧ 1`` for an exhaustion function ``f``, where ``j`` is
increased until the new stage is close to the old one on ``X_{n+1}`` and the
gradient increment is below ``2^{-n}``.

Everything runs on a finite truncation ``B_T(K)``.  When the search for ``j``
runs out of room the run is returned as partial, with the reason.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .capacity import HYPERBOLIC, PARABOLIC, capacity, classify
from .graph import (
    origin,
    GeneratedGraph,
    GraphError,
    VertexFunction,
    WeightedGraph,
    as_values,
    ball,
    laplacian_values,
    p_energy,
    vertex_key,
)
from .models import InconclusiveError
from .solvers import DEFAULT_TOL, ObstacleProblem, solve_obstacle

__all__ = [
    "NotParabolicError",
    "WeakMaxResult",
    "weak_max_check",
    "AhlforsResult",
    "ahlfors_check",
    "ExhaustionFunction",
    "exhaustion_function",
    "KhasminskiiStage",
    "KhasminskiiRun",
    "khasminskii_potential",
    "gradient_norm",
]


ACCEPT_MARGIN = 1e-9


class NotParabolicError(GraphError):
    """The construction needs a parabolic graph."""


# ---------------------------------------------------------------------------
# maximum principles

@dataclass
class WeakMaxResult:
    sup: float
    witness: Hashable
    omega_size: int
    escapes: bool
    unchecked: int

    @property
    def violation(self) -> bool:
        """Certified failure of the weak maximum principle on this truncation."""
        return self.sup <= 0 and not self.escapes


def weak_max_check(G: WeightedGraph, u, gamma: float, p: float) -> WeakMaxResult:
    """``sup Δ_p u`` over the superlevel set ``{u > γ}`` of the truncation.

    ``escapes`` is set when the superlevel set meets vertices whose
    neighbourhood is not materialised; those vertices are skipped.
    """
    vals = as_values(G, u)
    if np.ptp(vals) == 0:
        raise ValueError("u must be nonconstant")
    if not gamma < vals.max():
        raise ValueError("γ must lie below sup u")
    lap = laplacian_values(G, u, p)
    omega = np.flatnonzero(vals > gamma)
    if omega.size == 0:
        raise ValueError("empty superlevel set")
    ok = omega[~np.isnan(lap[omega])]
    escapes = ok.size < omega.size or bool(np.any(G.tail[omega] > 0))
    if ok.size == 0:
        return WeakMaxResult(math.nan, None, int(omega.size), True, int(omega.size))
    k = ok[int(np.argmax(lap[ok]))]
    return WeakMaxResult(float(lap[k]), G.vertices[k], int(omega.size), escapes,
                         int(omega.size - ok.size))


@dataclass
class AhlforsResult:
    sup_closure: float
    sup_boundary: float
    subharmonic: bool
    max_laplacian: float
    unchecked: int

    @property
    def equality(self) -> bool:
        return abs(self.sup_closure - self.sup_boundary) <= 1e-12 * max(1.0, abs(self.sup_closure))


def ahlfors_check(G: WeightedGraph, u, V: Iterable[Hashable], p: float, tol: float = 1e-8) -> AhlforsResult:
    """``sup_{V̄} u`` against ``sup_{∂_e V} u`` and p-subharmonicity of ``u`` on ``V``.

    Vertices of ``V`` without a materialised neighbourhood are not checked and
    are counted in ``unchecked``.
    """
    V = set(V)
    mask = G.mask(V)
    i, j = G.edges[:, 0], G.edges[:, 1]
    ext = np.unique(np.concatenate([j[mask[i] & ~mask[j]], i[mask[j] & ~mask[i]]]))
    if ext.size == 0:
        raise ValueError("∂_e V is empty")
    vals = as_values(G, u)
    closure = mask.copy()
    closure[ext] = True
    lap = laplacian_values(G, u, p)[mask]
    known = lap[~np.isnan(lap)]
    worst = float(known.max()) if known.size else -math.inf
    return AhlforsResult(float(vals[closure].max()), float(vals[ext].max()), worst <= tol, worst,
                         int(np.isnan(lap).sum()))


# ---------------------------------------------------------------------------
# exhaustion functions

@dataclass
class ExhaustionFunction:
    f: VertexFunction
    terms: list
    energy: float
    minkowski_bound: float
    level: float
    construction: str

    def level_radius(self, dist: dict, n: float) -> int:
        """Smallest ``R`` with ``f >= n`` at every vertex farther than ``R`` from ``K``."""
        bad = [d for x, d in dist.items() if self.f(x) < n]
        return max(bad, default=0)


def exhaustion_function(G, K: Sequence[Hashable] | None, p: float, budget: int,
                        construction: str = "sum", ratio: int = 1,
                        tol: float = DEFAULT_TOL) -> ExhaustionFunction:
    """Function vanishing on ``K`` that grows towards the truncation boundary.

    ``construction="sum"`` adds ``1 - e_n`` over the stages ``n = 0, ratio,
    2 ratio, ... <= budget``, where ``e_n`` is the equilibrium potential of
    ``K`` in ``B_n(K)``.  ``construction="scaled"`` uses ``(budget + 1)(1 -
    e_budget)`` instead, which is the distance function on a line.  In both
    cases ``f`` equals its maximal level outside ``B_budget(K)``.

    Raises NotParabolicError on graphs classified hyperbolic.
    """
    if isinstance(G, GeneratedGraph) and classify(G, None, p).label == HYPERBOLIC:
        raise NotParabolicError("exhaustion functions with finite energy need a parabolic graph")
    K = sorted(set(K if K is not None else [origin(G)]), key=vertex_key)
    if isinstance(G, GeneratedGraph):
        dist = G.distances(budget + 1, K)
        T = G.truncate(dist)
    else:
        T = G
        dist = ball(G, K, budget + 1)
    if construction == "sum":
        stages = list(range(0, budget + 1, max(1, ratio)))
        weights = [1.0] * len(stages)
    elif construction == "scaled":
        stages = [budget]
        weights = [budget + 1.0]
    else:
        raise ValueError(f"unknown construction {construction!r}")
    total = np.zeros(T.n)
    roots, terms = [], []
    for n, w in zip(stages, weights):
        V = [v for v, d in dist.items() if d <= n]
        res = capacity(T, K, V, p, tol, truncation=T)
        e = as_values(T, res.minimizer)
        total += w * (1.0 - e)
        roots.append(w * res.value ** (1.0 / p))
        terms.append({"n": n, "weight": w, "energy": res.value})
    level = float(sum(weights))
    f = VertexFunction.from_array(T, total, default=level)
    energy = p_energy(T, f, p) if not T.frontier or np.all(total[list(T.frontier)] == level) else math.nan
    return ExhaustionFunction(f, terms, energy, math.fsum(roots) ** p, level, construction)


# ---------------------------------------------------------------------------
# Khas'minskiĭ potentials

def gradient_norm(G: WeightedGraph, f, p: float) -> float:
    """``(Σ_{x,y} b(x,y) |f(x) - f(y)|^p)^{1/p}`` over ordered pairs of the truncation."""
    vals = as_values(G, f)
    d = getattr(f, "default", 0.0)
    i, j = G.edges[:, 0], G.edges[:, 1]
    terms = np.concatenate([2.0 * G.weights * np.abs(vals[i] - vals[j]) ** p,
                            2.0 * G.tail * np.abs(vals - d) ** p])
    return math.fsum(terms) ** (1.0 / p)


@dataclass
class KhasminskiiStage:
    n: int
    j: int
    radius: int
    sup_change: float
    gradient_increment: float
    trials: list = field(default_factory=list)


@dataclass
class KhasminskiiRun:
    K: tuple
    p: float
    truncation: int
    graph: WeightedGraph = field(repr=False)
    f: ExhaustionFunction = field(repr=False)
    kappa: VertexFunction = field(repr=False)
    stages: list = field(default_factory=list)
    snapshots: list = field(default_factory=list, repr=False)
    level_radii: list = field(default_factory=list)
    complete: bool = True
    diagnostic: str = ""
    monotone_h: bool = True
    h_bounded: bool = True

    def to_json(self) -> dict:
        return {"K": [list(k) if isinstance(k, tuple) else k for k in self.K], "p": self.p,
                "truncation": self.truncation, "complete": self.complete,
                "diagnostic": self.diagnostic, "monotone_h": self.monotone_h,
                "h_bounded": self.h_bounded, "exhaustion": self.f.construction,
                "level_radii": self.level_radii,
                "stages": [{"n": s.n, "j": s.j, "radius": s.radius, "sup_change": s.sup_change,
                            "gradient_increment": s.gradient_increment, "trials": s.trials}
                           for s in self.stages]}

    def radial_rows(self, radius) -> list[str]:
        """``r,kappa`` rows for radial families (one vertex per radius)."""
        rows = ["r,kappa"]
        seen = {}
        for v in self.graph.vertices:
            r = radius(v)
            if r <= self.truncation and r not in seen:
                seen[r] = self.kappa(v)
        for r in sorted(seen):
            rows.append(f"{r},{seen[r]!r}")
        return rows


def khasminskii_potential(G, K: Sequence[Hashable] | None, p: float, stages: int, truncation: int,
                          tol: float = DEFAULT_TOL, f: ExhaustionFunction | None = None,
                          construction: str = "scaled", check_class: bool = True) -> KhasminskiiRun:
    """Build ``s_0 = 0 <= s_1 <= ... <= s_stages`` by iterated obstacle problems.

    Stage ``n`` searches ``j = 1, 2, 4, ...``: with ``f_j = (f/j) ∧ 1`` the
    obstacle problem with obstacle and boundary data ``ψ_j = s_n + f_j`` is
    solved on ``B_R(K) ∖ K``, the smallest ball containing ``S_n`` and
    ``{f < j}``; the solution is extended by ``n + 1`` outside.  The stage is
    accepted when ``sup_{X_{n+1}} |h_j - s_n| < 2^{-n-1}`` and
    ``‖∇(h_j - s_n)‖_{p,b} < 2^{-n}``; here ``X_m`` is the smallest ball with
    ``f >= m`` outside it.
    """
    if check_class and isinstance(G, GeneratedGraph):
        label = classify(G, None, p).label
        if label == HYPERBOLIC:
            raise NotParabolicError("Khas'minskiĭ potentials exist only on parabolic graphs")
        if label != PARABOLIC:
            raise InconclusiveError("classification undecided; pass check_class=False to force")
    K = sorted(set(K if K is not None else [origin(G)]), key=vertex_key)
    if isinstance(G, GeneratedGraph):
        dist = G.distances(truncation, K)
        T = G.truncate(dist)
    else:
        T = G
        dist = ball(G, K, truncation)
    if f is None:
        f = exhaustion_function(T, K, p, truncation - 1, construction, tol=tol)
    fv = as_values(T, f.f)
    d_arr = np.full(T.n, truncation + 1)
    for v, d in dist.items():
        d_arr[T.index[v]] = d
    Kmask = T.mask(K)
    level_radii = [f.level_radius(dist, m) for m in range(stages + 2)]
    s = np.zeros(T.n)
    S_radius = 0
    run = KhasminskiiRun(tuple(K), float(p), truncation, T, f, VertexFunction({}, 0.0),
                         level_radii=level_radii)
    run.snapshots.append(VertexFunction.from_array(T, s, default=0.0))
    for n in range(stages):
        X_next = d_arr <= level_radii[n + 1]
        trials, prev_h, accepted = [], None, None
        j = 1
        while True:
            if j > f.level:
                run.complete, run.diagnostic = False, f"stage {n}: j={j} exceeds the level of f"
                break
            below = fv < j
            R = max(S_radius, int(d_arr[below].max()) if below.any() else 0)
            if R + 1 > truncation:
                run.complete, run.diagnostic = False, f"stage {n}: j={j} needs radius {R + 1} > truncation"
                break
            fj = np.minimum(fv / j, 1.0)
            psi = s + fj
            dom = (d_arr <= R) & ~Kmask
            psi_out = np.where(d_arr <= R, psi, n + 1.0)
            region = [T.vertices[k] for k in np.flatnonzero(dom)]
            data = VertexFunction.from_array(T, psi_out, default=n + 1.0, sparse=False)
            rep = solve_obstacle(ObstacleProblem(T, region, data, data, p), tol=tol)
            h = np.where(dom, rep.values, np.where(Kmask, 0.0, n + 1.0))
            rho = h - s
            sup_change = float(np.max(np.abs(rho[X_next]))) if X_next.any() else 0.0
            grad = gradient_norm(T, VertexFunction.from_array(T, rho, default=1.0, sparse=False), p)
            run.h_bounded &= bool(np.all(h <= n + 1 + 10 * tol))
            if prev_h is not None:
                run.monotone_h &= bool(np.all(h <= prev_h + 10 * tol))
            trials.append({"j": j, "radius": R, "sup_change": sup_change, "gradient": grad,
                           "converged": rep.converged})
            # a margin keeps rounding from accepting a stage that sits on a bound
            if sup_change < 2.0 ** (-n - 1) - ACCEPT_MARGIN and grad < 2.0 ** -n - ACCEPT_MARGIN:
                accepted = (j, R, sup_change, grad, h)
                break
            prev_h = h
            j *= 2
        if accepted is None:
            run.stages.append(KhasminskiiStage(n, -1, -1, math.nan, math.nan, trials))
            break
        j, R, sup_change, grad, h = accepted
        run.stages.append(KhasminskiiStage(n, j, R, sup_change, grad, trials))
        s, S_radius = h, R
        run.snapshots.append(VertexFunction.from_array(T, s, default=float(n + 1)))
    run.kappa = run.snapshots[-1]
    return run
