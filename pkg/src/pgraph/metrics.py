"""Intrinsic edge weights, path metrics, flows and their divergence.

Edge-valued data live on the materialised edges of a finite graph (or
truncation) in the canonical edge order ``(i, j)`` with ``i < j``.  Flows
store one value per edge and read off the reverse orientation by negation,
so skew-symmetry holds exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .capacity import harmonic_potential
from .graph import (
    origin,
    GraphError,
    VertexFunction,
    WeightedGraph,
    as_values,
    p_energy,
    signed_power,
    vertex_key,
)
from .solvers import DEFAULT_TOL

__all__ = [
    "EdgeWeighting",
    "PathDistance",
    "path_metric",
    "distances_from",
    "IntrinsicReport",
    "intrinsic_check",
    "intrinsic_from_function",
    "MetricNullStage",
    "metric_null_sequence",
    "injectivize",
    "EdgeFlow",
    "gradient_flow",
    "divergence",
    "divergence_values",
    "flow_greens_residual",
    "KNRCertificate",
    "knr_certificate",
    "ball_finiteness",
]


@dataclass(frozen=True, eq=False)
class EdgeWeighting:
    """Non-negative symmetric weight on the edges of ``graph``."""

    graph: WeightedGraph
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.graph.edges),):
            raise ValueError("one value per edge expected")
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("edge weights must be finite and non-negative")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, graph: WeightedGraph, w: Callable[[Hashable, Hashable], float] | Mapping
                      | float) -> "EdgeWeighting":
        if isinstance(w, (int, float)):
            return cls(graph, np.full(len(graph.edges), float(w)))
        vs = graph.vertices
        if isinstance(w, Mapping):
            def get(x, y):
                return w[(x, y)] if (x, y) in w else w[(y, x)]
        else:
            get = w
        return cls(graph, np.array([float(get(vs[i], vs[j])) for i, j in graph.edges]))

    @property
    def alternative(self) -> bool:
        return bool(np.all(self.values > 0))

    def __call__(self, x, y) -> float:
        i, j = sorted((self.graph.index[x], self.graph.index[y]))
        hit = np.flatnonzero((self.graph.edges[:, 0] == i) & (self.graph.edges[:, 1] == j))
        if not hit.size:
            raise KeyError((x, y))
        return float(self.values[hit[0]])


def _matrix(w: EdgeWeighting) -> csr_matrix:
    G = w.graph
    i, j = G.edges[:, 0], G.edges[:, 1]
    return csr_matrix((np.concatenate([w.values, w.values]), (np.concatenate([i, j]),
                                                               np.concatenate([j, i]))),
                      shape=(G.n, G.n))


def distances_from(w: EdgeWeighting, sources: Iterable[Hashable]) -> np.ndarray:
    """Multi-source shortest-path distances ``min_{s} d_w(s, ·)`` on the graph."""
    if not w.alternative:
        raise ValueError("path metric needs strictly positive edge weights")
    idx = w.graph.indices(sources)
    return dijkstra(_matrix(w), directed=False, indices=idx, min_only=True)


@dataclass
class PathDistance:
    value: float
    certified: bool
    reachable: bool
    escape_bound: float

    def to_json(self) -> dict:
        return {"d": self.value, "certified": self.certified, "reachable": self.reachable,
                "escape_bound": self.escape_bound}


def path_metric(G: WeightedGraph, w: EdgeWeighting, x: Hashable, y: Hashable) -> PathDistance:
    """``d_w(x, y)``: infimum of path lengths, computed on the materialised graph.

    On a truncation the value is certified when it does not exceed the
    distance from ``x`` to the frontier: no path leaving the truncation can
    then be shorter.
    """
    d = distances_from(w, [x])
    val = float(d[G.index[y]])
    edge = [i for i in G.frontier] + list(np.flatnonzero(G.tail > 0))
    bound = float(np.min(d[edge])) if edge else math.inf
    reachable = math.isfinite(val)
    certified = val <= bound if reachable else not edge
    return PathDistance(val, bool(certified), reachable, bound)


def ball_finiteness(G: WeightedGraph, w: EdgeWeighting, x: Hashable, radius: float) -> bool:
    """True when the ``d_w``-ball of ``radius`` about ``x`` stays inside the truncation."""
    d = distances_from(w, [x])
    edge = [i for i in G.frontier] + list(np.flatnonzero(G.tail > 0))
    return bool(not edge or np.min(d[edge]) > radius)


# ---------------------------------------------------------------------------
# intrinsic weights

@dataclass
class IntrinsicReport:
    slack: dict
    max_violation: float
    intrinsic: bool


def _edge_sums(G: WeightedGraph, vals: np.ndarray) -> np.ndarray:
    i, j = G.edges[:, 0], G.edges[:, 1]
    return np.bincount(i, vals, G.n).astype(float) + np.bincount(j, vals, G.n)


def intrinsic_check(G: WeightedGraph, w: EdgeWeighting, measure, p: float,
                    V: Iterable[Hashable] | None = None, tol: float = 1e-12) -> IntrinsicReport:
    """Slack ``m'(x) - Σ_y b(x,y) w(x,y)^p`` on ``V`` (default: non-frontier vertices)."""
    mp = as_values(G, measure)
    load = _edge_sums(G, G.weights * w.values ** p)
    if V is None:
        V = [v for k, v in enumerate(G.vertices) if k not in G.frontier and G.tail[k] == 0]
    slack = {}
    for x in sorted(V, key=vertex_key):
        i = G.index[x]
        if i in G.frontier or G.tail[i] > 0:
            raise GraphError(f"neighbourhood of {x!r} is not fully materialised")
        slack[x] = float(mp[i] - load[i])
    worst = max((-s for s in slack.values()), default=0.0)
    return IntrinsicReport(slack, max(worst, 0.0), worst <= tol)


def intrinsic_from_function(G: WeightedGraph, f, p: float) -> tuple[EdgeWeighting, VertexFunction]:
    """``σ_f(x,y) = |f(x) - f(y)|`` on edges and ``m_f(x) = Σ_y b σ_f^p``.

    ``Σ_x m_f(x) = 2 𝓔_p(f)`` over the truncation; ``σ_f`` is intrinsic for
    ``m_f`` with zero slack.
    """
    u = as_values(G, f)
    if len(np.unique(u)) != len(u):
        raise GraphError("f is not injective on the truncation; use injectivize first")
    i, j = G.edges[:, 0], G.edges[:, 1]
    sigma = EdgeWeighting(G, np.abs(u[i] - u[j]))
    mf = _edge_sums(G, G.weights * sigma.values ** p)
    return sigma, VertexFunction.from_array(G, mf, default=0.0, sparse=False)


@dataclass
class MetricNullStage:
    e: VertexFunction
    energy: float
    bound: float
    escapes: bool


def metric_null_sequence(G: WeightedGraph, sigma: EdgeWeighting, Ks: Sequence[Iterable[Hashable]],
                         p: float, measure) -> list[MetricNullStage]:
    """``e_n = 0 ∨ (1 - d_σ(·, K_n))`` with energy and the bound ``m'(X ∖ K_n)``.

    ``escapes`` flags a support that reaches the truncation frontier, where
    the energy is no longer determined.
    """
    mp = as_values(G, measure)
    edge = np.zeros(G.n, dtype=bool)
    edge[list(G.frontier)] = True
    edge |= G.tail > 0
    if not sigma.alternative:
        raise ValueError("σ must be strictly positive on edges")
    out = []
    for K in Ks:
        K = list(K)
        d = distances_from(sigma, K)
        e = np.maximum(0.0, 1.0 - d)
        escapes = bool(np.any(e[edge] > 0))
        mask = G.mask(K)
        bound = math.fsum(mp[~mask])
        vf = VertexFunction.from_array(G, e, 0.0)
        energy = math.nan if escapes else p_energy(G, vf, p)
        out.append(MetricNullStage(vf, energy, bound, escapes))
    return out


def injectivize(G: WeightedGraph, f, eps: float, p: float) -> VertexFunction:
    """Perturb ``f`` on colliding vertices so that all values differ.

    The ``k``-th perturbed vertex moves by at most ``δ 2^{-k}`` with ``δ``
    chosen so that ``Σ |offset| 𝓔_p(1_x)^{1/p} < ε^{1/p}`` and every offset is
    below ``ε``; both bounds are re-verified on the output.  Frontier vertices
    are held fixed.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    u = as_values(G, f).astype(float)
    order = sorted(range(G.n), key=lambda k: (k not in G.frontier, vertex_key(G.vertices[k])))
    seen: set = set()
    new = u.copy()
    unit = (G.deg + G.c) ** (1.0 / p)
    base = 0.5 * min(eps, eps ** (1.0 / p))
    k = 0
    for idx in order:
        val = u[idx]
        if val not in seen:
            seen.add(val)
            continue
        if idx in G.frontier:
            raise GraphError("two frontier vertices share a value; enlarge the truncation")
        k += 1
        delta = base * 2.0 ** -k / max(1.0, unit[idx])
        t = 1
        cand = val + delta
        while cand in seen or cand in u:
            t += 1
            cand = val + delta * (1.0 - 3.0 ** -t)
        new[idx] = cand
        seen.add(cand)
    diff = new - u
    if np.max(np.abs(diff), initial=0.0) >= eps:
        raise AssertionError("sup bound violated")
    if p_energy(G, VertexFunction.from_array(G, diff, 0.0), p) >= eps:
        raise AssertionError("energy bound violated")
    return VertexFunction.from_array(G, new, default=getattr(f, "default", 0.0), sparse=False)


# ---------------------------------------------------------------------------
# flows

@dataclass(frozen=True, eq=False)
class EdgeFlow:
    """Skew-symmetric edge function: ``values[e] = F(i, j)`` for edge ``e = (i, j)``, ``i < j``.

    ``tail`` holds the total flux ``Σ b F`` towards unmaterialised neighbours.
    """

    graph: WeightedGraph
    values: np.ndarray
    tail: np.ndarray | None = None

    def __call__(self, x, y) -> float:
        G = self.graph
        a, b = G.index[x], G.index[y]
        i, j = min(a, b), max(a, b)
        hit = np.flatnonzero((G.edges[:, 0] == i) & (G.edges[:, 1] == j))
        if not hit.size:
            raise KeyError((x, y))
        v = float(self.values[hit[0]])
        return v if a == i else -v

    def to_json(self) -> list:
        G = self.graph
        pairs = []
        for (i, j), v in zip(G.edges, self.values):
            pairs.append((G.vertices[i], G.vertices[j], float(v)))
            pairs.append((G.vertices[j], G.vertices[i], -float(v)))
        pairs.sort(key=lambda t: (vertex_key(t[0]), vertex_key(t[1])))
        return [[_jid(a), _jid(b), v] for a, b, v in pairs]


def _jid(v):
    return list(v) if isinstance(v, tuple) else v


def gradient_flow(G: WeightedGraph, u, p: float) -> EdgeFlow:
    """``F(x, y) = <u(x) - u(y)>``, with the tail flux towards the default value."""
    vals = as_values(G, u)
    d = getattr(u, "default", 0.0)
    i, j = G.edges[:, 0], G.edges[:, 1]
    tail = G.tail * signed_power(vals - d, p)
    return EdgeFlow(G, signed_power(vals[i] - vals[j], p), tail)


def divergence_values(F: EdgeFlow) -> np.ndarray:
    """``Div F(x) = m(x)^{-1} Σ_y b(x,y) F(x,y)`` at every vertex."""
    G = F.graph
    i, j = G.edges[:, 0], G.edges[:, 1]
    flux = G.weights * F.values
    out = np.bincount(i, flux, G.n).astype(float) - np.bincount(j, flux, G.n)
    if F.tail is not None:
        out = out + F.tail
    return out / G.m


def divergence(G: WeightedGraph, F: EdgeFlow, x: Hashable) -> float:
    i = G.index[x]
    js, bs = G.neighbor_indices(i)
    terms = [b * F(x, G.vertices[k]) for k, b in zip(js, bs)]
    if F.tail is not None:
        terms.append(F.tail[i])
    return math.fsum(terms) / G.m[i]


def flow_greens_residual(G: WeightedGraph, F: EdgeFlow, phi) -> float:
    """``½ Σ_{x,y} b F(x,y) (φ(x) - φ(y)) - Σ_x Div F(x) φ(x) m(x)``."""
    w = as_values(G, phi)
    i, j = G.edges[:, 0], G.edges[:, 1]
    lhs = [G.weights * F.values * (w[i] - w[j])]
    if F.tail is not None:
        lhs.append(F.tail * w)
    div = divergence_values(F)
    return math.fsum(np.concatenate(lhs)) - math.fsum(div * w * G.m)


@dataclass
class KNRCertificate:
    o_mass: float
    total: float
    cap_N: float
    tail_flux: float
    N: int

    def to_json(self) -> dict:
        return {"o_mass": self.o_mass, "total": self.total, "cap_N": self.cap_N,
                "tail_flux": self.tail_flux, "N": self.N}


def knr_certificate(G, o: Hashable | None, p: float, N: int, tol: float = DEFAULT_TOL) -> KNRCertificate:
    """Flow of the stage-``N`` equilibrium potential: source mass at ``o`` and total divergence.

    The total over the closed truncation (materialised edges) vanishes by
    skew-symmetry; flux through tail edges is reported separately.
    """
    o = o if o is not None else origin(G)
    seq = harmonic_potential(G, o, p, N, tol)
    T = seq.truncation
    u = seq.stages[-1].u
    F = gradient_flow(T, u, p)
    i, j = T.edges[:, 0], T.edges[:, 1]
    flux = T.weights * F.values
    io = T.index[o]
    mass = math.fsum(np.concatenate([flux[i == io], -flux[j == io], [F.tail[io]]]))
    # Σ_x m(x) Div F(x) over the closed truncation, tail flux left out
    total = math.fsum(divergence_values(EdgeFlow(T, F.values)) * T.m)
    return KNRCertificate(mass, total, seq.stages[-1].cap, math.fsum(F.tail), N)
