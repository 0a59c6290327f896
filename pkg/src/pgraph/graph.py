"""Weighted graphs, vertex functions and the elementary nonlinear operators.

A graph is a quadruple of vertices with a positive measure ``m``, a
non-negative potential ``c`` and symmetric edge weights ``b``.  Finite graphs
are stored explicitly in :class:`WeightedGraph`; infinite families are
described by a :class:`GeneratedGraph` neighbour oracle and every numerical
routine works on a finite truncation produced by
:meth:`GeneratedGraph.truncate`.

A truncation may carry *tail* weight: the total weight from a materialised
vertex to neighbours that were not materialised (for instance the infinitely
many leaves of a star).  Functions are assumed to take their declared default
value on those neighbours, which is exact for compactly supported functions
and for Dirichlet data that is constant off the materialised set.
"""
from __future__ import annotations

import itertools
import math
import re
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "GraphError",
    "PGraphParseError",
    "GraphValidationError",
    "DegreeDivergenceError",
    "NotInFpError",
    "vertex_key",
    "origin",
    "signed_power",
    "VertexFunction",
    "WeightedGraph",
    "GeneratedGraph",
    "FiniteRegion",
    "Exhaustion",
    "Component",
    "load_graph",
    "dump_graph",
    "as_values",
    "region",
    "ball",
    "p_laplacian",
    "schroedinger",
    "laplacian_values",
    "p_energy",
    "energy_pairing",
    "greens_formula_residual",
    "ends",
    "diagnostic_norm",
    "random_graph",
    "iter_pairs",
]


class GraphError(ValueError):
    """Base class for graph construction and evaluation errors."""


class PGraphParseError(GraphError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class GraphValidationError(GraphError):
    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class DegreeDivergenceError(GraphError):
    """A neighbourhood exceeded the neighbour cap and has no declared tail."""


class NotInFpError(GraphError):
    """The Laplacian sum diverges at a vertex."""


def vertex_key(v: Hashable) -> tuple:
    """Sort key giving the canonical vertex order (ints, then tuples, then strings)."""
    if isinstance(v, (bool, np.bool_)):
        return (2, str(v))
    if isinstance(v, (int, np.integer)):
        return (0, int(v))
    if isinstance(v, tuple):
        return (1, v)
    return (2, str(v))


def signed_power(a, p: float):
    """Signed power ``|a|^(p-1) sgn(a)``; works on scalars and arrays."""
    if not p > 1:
        raise ValueError(f"p must be > 1, got {p}")
    if np.ndim(a) == 0:
        a = float(a)
        return math.copysign(abs(a) ** (p - 1.0), a) if a != 0.0 else 0.0
    a = np.asarray(a, dtype=float)
    return np.sign(a) * np.abs(a) ** (p - 1.0)


def _check_p(p: float) -> float:
    p = float(p)
    if not p > 1 or not math.isfinite(p):
        raise ValueError(f"p must be a finite number > 1, got {p}")
    return p


@dataclass(frozen=True)
class VertexFunction:
    """Sparse vertex -> real map with a default value off its support."""

    support: Mapping[Hashable, float] = field(default_factory=dict)
    default: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "support", MappingProxyType(dict(self.support)))

    def __call__(self, x: Hashable) -> float:
        return self.support.get(x, self.default)

    def on(self, graph: "WeightedGraph") -> np.ndarray:
        return as_values(graph, self)

    @classmethod
    def from_array(cls, graph: "WeightedGraph", values: Sequence[float], default: float = 0.0,
                   sparse: bool = False) -> "VertexFunction":
        values = np.asarray(values, dtype=float)
        if sparse:
            data = {v: float(x) for v, x in zip(graph.vertices, values) if x != default}
        else:
            data = {v: float(x) for v, x in zip(graph.vertices, values)}
        return cls(data, default)

    def to_json(self) -> dict:
        items = sorted(self.support.items(), key=lambda kv: vertex_key(kv[0]))
        return {"default": self.default, "values": [[_json_id(k), v] for k, v in items]}


def _json_id(v):
    return list(v) if isinstance(v, tuple) else v


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Finite (possibly truncated) weighted graph in canonical vertex order.

    ``edges`` holds index pairs ``i < j`` with weights ``weights``.  ``tail[i]``
    is the weight from vertex ``i`` to unmaterialised neighbours and
    ``frontier`` the indices whose neighbourhood is only partially known.
    """

    vertices: tuple
    m: np.ndarray
    c: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    tail: np.ndarray
    frontier: frozenset = frozenset()
    root: Hashable | None = None
    name: str = "explicit"
    meta: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def build(cls, edges: Iterable[tuple[Hashable, Hashable, float]],
              m: Mapping | Callable | None = None, c: Mapping | Callable | None = None,
              vertices: Iterable[Hashable] | None = None, tail: Mapping | None = None,
              frontier: Iterable[Hashable] = (), root: Hashable | None = None,
              name: str = "explicit", meta: Mapping | None = None,
              check_connected: bool = True) -> "WeightedGraph":
        edge_list = list(edges)
        vset = set(vertices) if vertices is not None else set()
        for x, y, _ in edge_list:
            vset.add(x)
            vset.add(y)
        order = tuple(sorted(vset, key=vertex_key))
        index = {v: i for i, v in enumerate(order)}
        seen = set()
        ij = np.empty((len(edge_list), 2), dtype=np.int64)
        w = np.empty(len(edge_list), dtype=float)
        for k, (x, y, b) in enumerate(edge_list):
            if x == y:
                raise GraphValidationError("self-loop", f"edge ({x}, {y})")
            b = float(b)
            if not (b > 0 and math.isfinite(b)):
                raise GraphValidationError("non-positive weight", f"b({x}, {y}) = {b}")
            i, j = sorted((index[x], index[y]))
            if (i, j) in seen:
                raise GraphValidationError("duplicate edge", f"edge ({x}, {y})")
            seen.add((i, j))
            ij[k] = (i, j)
            w[k] = b
        if len(edge_list):
            perm = np.lexsort((ij[:, 1], ij[:, 0]))
            ij, w = ij[perm], w[perm]
        mv = _vertex_array(order, m, 1.0)
        cv = _vertex_array(order, c, 0.0)
        tv = _vertex_array(order, tail, 0.0)
        if np.any(~(mv > 0)) or np.any(~np.isfinite(mv)):
            bad = order[int(np.argmin(np.where(np.isfinite(mv), mv, -np.inf)))]
            raise GraphValidationError("non-positive measure", f"m({bad}) must be > 0")
        if np.any(~(cv >= 0)):
            bad = order[int(np.argmin(cv))]
            raise GraphValidationError("negative potential", f"c({bad}) must be >= 0")
        if np.any(~(tv >= 0)):
            raise GraphValidationError("negative tail", "tail weights must be >= 0")
        front = frozenset(index[v] for v in frontier)
        g = cls(order, mv, cv, ij, w, tv, front, root, name, MappingProxyType(dict(meta or {})))
        if check_connected and len(order) > 1 and not g.is_connected():
            raise GraphValidationError("disconnected", "graph is not connected")
        return g

    @property
    def n(self) -> int:
        return len(self.vertices)

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        n = self.n
        i, j = self.edges[:, 0], self.edges[:, 1]
        a = sp.coo_matrix((np.concatenate([self.weights, self.weights]),
                           (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n))
        return a.tocsr()

    @cached_property
    def deg(self) -> np.ndarray:
        """Weighted degree including tail weight."""
        return np.asarray(self.adjacency.sum(axis=1)).ravel() + self.tail

    def neighbors(self, x: Hashable) -> list[tuple[Hashable, float]]:
        i = self.index[x]
        a = self.adjacency
        lo, hi = a.indptr[i], a.indptr[i + 1]
        return [(self.vertices[j], float(b)) for j, b in zip(a.indices[lo:hi], a.data[lo:hi])]

    def neighbor_indices(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        a = self.adjacency
        lo, hi = a.indptr[i], a.indptr[i + 1]
        return a.indices[lo:hi], a.data[lo:hi]

    def weight(self, x: Hashable, y: Hashable) -> float:
        return float(self.adjacency[self.index[x], self.index[y]])

    def indices(self, vs: Iterable[Hashable]) -> np.ndarray:
        """Positions of ``vs`` in ascending order (the input order is not kept)."""
        idx = self.index
        try:
            return np.array(sorted(idx[v] for v in vs), dtype=np.int64)
        except KeyError as exc:
            raise GraphError(f"vertex {exc.args[0]!r} is not materialised") from None

    def mask(self, vs: Iterable[Hashable]) -> np.ndarray:
        out = np.zeros(self.n, dtype=bool)
        out[self.indices(vs)] = True
        return out

    def is_complete(self, x: Hashable) -> bool:
        return self.index[x] not in self.frontier

    def is_connected(self) -> bool:
        from scipy.sparse.csgraph import connected_components
        k, _ = connected_components(self.adjacency, directed=False)
        return k == 1

    def has_potential(self) -> bool:
        return bool(np.any(self.c > 0))


def _vertex_array(order, data, fill) -> np.ndarray:
    if data is None:
        return np.full(len(order), float(fill))
    if callable(data):
        return np.array([float(data(v)) for v in order])
    return np.array([float(data.get(v, fill)) for v in order])


def as_values(graph: WeightedGraph, f, default: float | None = None) -> np.ndarray:
    """Values of ``f`` on the vertices of ``graph`` in canonical order.

    ``f`` may be a :class:`VertexFunction`, a mapping, a callable or an array
    aligned to ``graph.vertices``.
    """
    if isinstance(f, VertexFunction):
        sup = f.support
        d = f.default
        return np.array([sup.get(v, d) for v in graph.vertices], dtype=float)
    if isinstance(f, Mapping):
        d = 0.0 if default is None else default
        return np.array([float(f.get(v, d)) for v in graph.vertices], dtype=float)
    if callable(f):
        return np.array([float(f(v)) for v in graph.vertices], dtype=float)
    arr = np.asarray(f, dtype=float)
    if arr.shape != (graph.n,):
        raise GraphError(f"array of shape {arr.shape} does not match {graph.n} vertices")
    return arr


def _default_of(f) -> float:
    return f.default if isinstance(f, VertexFunction) else 0.0


# ---------------------------------------------------------------------------
# pgraph v1 text format

_INT = re.compile(r"[+-]?\d+\Z")


def _parse_id(tok: str):
    return int(tok) if _INT.match(tok) else tok


def load_graph(text: bytes | str, root: Hashable | None = None) -> WeightedGraph:
    """Parse and validate a pgraph v1 file."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    meas, pot, edges = {}, {}, []
    seen_edges = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        kind = toks[0]
        if kind == "V":
            if len(toks) != 4:
                raise PGraphParseError(lineno, "vertex line must be 'V <id> <m> <c>'")
            v = _parse_id(toks[1])
            m, c = _parse_real(lineno, toks[2]), _parse_real(lineno, toks[3])
            if v in meas:
                raise PGraphParseError(lineno, f"duplicate vertex {toks[1]}")
            if not m > 0:
                raise PGraphParseError(lineno, f"non-positive measure for vertex {toks[1]}")
            if c < 0:
                raise PGraphParseError(lineno, f"negative potential for vertex {toks[1]}")
            meas[v], pot[v] = m, c
        elif kind == "E":
            if len(toks) != 4:
                raise PGraphParseError(lineno, "edge line must be 'E <id1> <id2> <b>'")
            x, y = _parse_id(toks[1]), _parse_id(toks[2])
            b = _parse_real(lineno, toks[3])
            if x == y:
                raise PGraphParseError(lineno, f"self-loop at {toks[1]}")
            if not b > 0:
                raise PGraphParseError(lineno, f"non-positive weight on edge {toks[1]}-{toks[2]}")
            key = frozenset((x, y))
            if key in seen_edges:
                raise PGraphParseError(lineno, f"duplicate edge {toks[1]}-{toks[2]}")
            seen_edges.add(key)
            edges.append((x, y, b, lineno))
        else:
            raise PGraphParseError(lineno, f"unknown record type {kind!r}")
    for x, y, _, lineno in edges:
        for v in (x, y):
            if v not in meas:
                raise PGraphParseError(lineno, f"edge references undeclared vertex {v}")
    if not meas:
        raise GraphValidationError("empty", "no vertices declared")
    order = sorted(meas, key=vertex_key)
    return WeightedGraph.build([(x, y, b) for x, y, b, _ in edges], meas, pot, vertices=order,
                               root=order[0] if root is None else root)


def _parse_real(lineno: int, tok: str) -> float:
    try:
        val = float(tok)
    except ValueError:
        raise PGraphParseError(lineno, f"not a real number: {tok!r}") from None
    if not math.isfinite(val):
        raise PGraphParseError(lineno, f"non-finite value {tok!r}")
    return val


def _fmt_id(v) -> str:
    if isinstance(v, tuple):
        return ".".join(str(t) for t in v) if v else "root"
    return str(v)


def dump_graph(graph: WeightedGraph, header: str | None = None) -> str:
    """Serialise the materialised part of ``graph`` in pgraph v1 format."""
    lines = ["# pgraph v1"]
    if header:
        lines += [f"# {h}" for h in header.splitlines()]
    if graph.tail.any() or graph.frontier:
        lines.append("# truncation: tail weights and frontier neighbourhoods are omitted")
    for v, m, c in zip(graph.vertices, graph.m, graph.c):
        lines.append(f"V {_fmt_id(v)} {float(m)!r} {float(c)!r}")
    for (i, j), b in zip(graph.edges, graph.weights):
        lines.append(f"E {_fmt_id(graph.vertices[i])} {_fmt_id(graph.vertices[j])} {float(b)!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# generated (infinite) graphs

class GeneratedGraph:
    """Infinite graph given by a neighbour oracle.

    Parameters
    ----------
    name : str
        Family descriptor.
    root : hashable
        Distinguished vertex.
    neighbors : callable
        ``x -> iterable of (y, b)``; may be infinite, must be deterministic.
    measure, potential : callable, optional
        Vertex measure (default 1) and potential (default 0).
    tail : callable, optional
        ``(x, k) -> total weight of the neighbours of x after the first k``.
        Required for vertices with more than ``neighbor_cap`` neighbours.
    exhaustion : callable, optional
        ``n -> finite vertex set``; defaults to combinatorial balls about the root.
    """

    def __init__(self, name: str, root: Hashable, neighbors: Callable[[Hashable], Iterable],
                 measure: Callable[[Hashable], float] | None = None,
                 potential: Callable[[Hashable], float] | None = None,
                 tail: Callable[[Hashable, int], float] | None = None,
                 exhaustion: Callable[[int], Iterable[Hashable]] | None = None,
                 params: Mapping | None = None, neighbor_cap: int = 4096,
                 radius: Callable[[Hashable], int] | None = None):
        self.name = name
        self.root = root
        self._neighbors = neighbors
        self._measure = measure or (lambda x: 1.0)
        self._potential = potential or (lambda x: 0.0)
        self._tail = tail
        self._exhaustion = exhaustion
        self.params = dict(params or {})
        self.neighbor_cap = int(neighbor_cap)
        self.radius = radius
        self.spec = None

    def __repr__(self):
        return f"GeneratedGraph({self.name!r})"

    def measure(self, x) -> float:
        return float(self._measure(x))

    def potential(self, x) -> float:
        return float(self._potential(x))

    def has_potential(self) -> bool:
        return self.params.get("has_potential", False)

    def neighborhood(self, x) -> tuple[list[tuple[Hashable, float]], float]:
        """Listed neighbours (at most ``neighbor_cap``) and the tail weight of the rest."""
        items = list(itertools.islice(iter(self._neighbors(x)), self.neighbor_cap + 1))
        if len(items) <= self.neighbor_cap:
            return [(y, float(b)) for y, b in items], 0.0
        if self._tail is None:
            raise DegreeDivergenceError(
                f"neighbour cap {self.neighbor_cap} exceeded at {x!r} and no tail weight is declared")
        tail = float(self._tail(x, self.neighbor_cap))
        if not math.isfinite(tail):
            raise NotInFpError(f"not in F^p at {x!r}: infinite tail weight")
        return [(y, float(b)) for y, b in items[: self.neighbor_cap]], tail

    def neighbors(self, x) -> list[tuple[Hashable, float]]:
        return self.neighborhood(x)[0]

    def ball(self, n: int, K: Iterable[Hashable] | None = None) -> list[Hashable]:
        """Vertices within combinatorial distance ``n`` of ``K`` (default: the root)."""
        return sorted(self.distances(n, K), key=vertex_key)

    def distances(self, n: int, K: Iterable[Hashable] | None = None) -> dict:
        start = [self.root] if K is None else list(K)
        dist = {v: 0 for v in start}
        queue = deque(start)
        while queue:
            x = queue.popleft()
            if dist[x] >= n:
                continue
            nbrs, tail = self.neighborhood(x)
            if tail > 0:
                raise GraphError(f"ball of radius {n} is infinite: {x!r} has infinitely many neighbours")
            for y, _ in nbrs:
                if y not in dist:
                    dist[y] = dist[x] + 1
                    queue.append(y)
        return dist

    def stage(self, n: int) -> list[Hashable]:
        if self._exhaustion is not None:
            return sorted(self._exhaustion(n), key=vertex_key)
        return self.ball(n)

    def truncate(self, V: Iterable[Hashable], name: str | None = None) -> WeightedGraph:
        """Materialise the closure of ``V`` with tails for unlisted neighbours."""
        V = set(V)
        edges = {}
        tails = {}
        listed = {}
        for x in sorted(V, key=vertex_key):
            nbrs, tail = self.neighborhood(x)
            listed[x] = nbrs
            if tail:
                tails[x] = tail
            for y, b in nbrs:
                key = (x, y) if vertex_key(x) <= vertex_key(y) else (y, x)
                edges[key] = b
        boundary = {y for x in V for y, _ in listed[x]} - V
        frontier = set()
        for y in sorted(boundary, key=vertex_key):
            try:
                nbrs, tail = self.neighborhood(y)
            except GraphError:
                frontier.add(y)
                continue
            complete = tail == 0
            for z, b in nbrs:
                if z in V:
                    continue
                if z in boundary:
                    key = (y, z) if vertex_key(y) <= vertex_key(z) else (z, y)
                    edges[key] = b
                else:
                    complete = False
            if not complete:
                frontier.add(y)
        verts = V | boundary
        return WeightedGraph.build(
            [(x, y, b) for (x, y), b in edges.items()],
            m=self.measure, c=self.potential, vertices=verts, tail=tails, frontier=frontier,
            root=self.root if self.root in verts else None, name=name or self.name,
            meta={"source": self.name, "inner": len(V)}, check_connected=False)

    def truncate_ball(self, n: int, K: Iterable[Hashable] | None = None) -> WeightedGraph:
        return self.truncate(self.ball(n, K), name=f"{self.name}|B{n}")


# ---------------------------------------------------------------------------
# regions and exhaustions

@dataclass(frozen=True)
class FiniteRegion:
    inner: tuple
    exterior_boundary: tuple
    interior_boundary: tuple
    closure: tuple


def region(graph: WeightedGraph | GeneratedGraph, V: Iterable[Hashable]) -> FiniteRegion:
    """Exterior/interior boundary and closure of a finite vertex set."""
    V = set(V)
    if isinstance(graph, GeneratedGraph):
        graph = graph.truncate(V)
    idx = graph.index
    missing = [v for v in V if v not in idx]
    if missing:
        raise GraphError(f"vertex {missing[0]!r} is not materialised")
    ext, intr = set(), set()
    for x in V:
        i = idx[x]
        if graph.tail[i] > 0:
            intr.add(x)
        for y, _ in graph.neighbors(x):
            if y not in V:
                ext.add(y)
                intr.add(x)
    key = vertex_key
    return FiniteRegion(tuple(sorted(V, key=key)), tuple(sorted(ext, key=key)),
                        tuple(sorted(intr, key=key)), tuple(sorted(V | ext, key=key)))


def origin(graph) -> Hashable:
    """The graph's root, or its first vertex when none is marked."""
    return graph.root if graph.root is not None else graph.vertices[0]


def ball(graph: WeightedGraph, K: Iterable[Hashable], n: int) -> dict:
    """Combinatorial distances from ``K`` up to ``n`` on a finite graph."""
    start = list(K)
    dist = {v: 0 for v in start}
    queue = deque(start)
    while queue:
        x = queue.popleft()
        if dist[x] >= n:
            continue
        for y, _ in graph.neighbors(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


@dataclass
class Exhaustion:
    """Increasing finite sets ``X_0 ⊆ X_1 ⊆ ...``; balls about ``K`` by default."""

    graph: WeightedGraph | GeneratedGraph
    K: tuple = ()
    policy: str = "ball"

    def __post_init__(self):
        if not self.K:
            self.K = (self.graph.root,)
        self.K = tuple(sorted(self.K, key=vertex_key))

    def stage(self, n: int) -> list[Hashable]:
        g = self.graph
        if isinstance(g, GeneratedGraph):
            if self.policy == "ball" and g._exhaustion is not None and self.K == (g.root,):
                return g.stage(n)
            return g.ball(n, self.K)
        return sorted(ball(g, self.K, n), key=vertex_key)


# ---------------------------------------------------------------------------
# operators

ROUND = 8 * np.finfo(float).eps


def rounded_difference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a - b`` with differences at rounding level of the operands set to 0.

    For p < 2 a rounding-level difference would otherwise contribute about
    ``eps^(p-1)`` to the operator, far above any sensible tolerance.
    """
    d = np.asarray(a - b, dtype=float)
    tiny = np.abs(d) <= ROUND * np.maximum(np.abs(a), np.abs(b))
    return np.where(tiny, 0.0, d)


def _flux(graph: WeightedGraph, u: np.ndarray, p: float) -> np.ndarray:
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    return graph.weights * signed_power(rounded_difference(u[i], u[j]), p)


def laplacian_values(graph: WeightedGraph, f, p: float, potential: bool = False) -> np.ndarray:
    """``Δ_p f`` (or ``L_p f``) at every vertex; NaN on frontier vertices."""
    p = _check_p(p)
    u = as_values(graph, f)
    d = _default_of(f)
    flux = _flux(graph, u, p)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    out = np.bincount(i, flux, graph.n).astype(float) - np.bincount(j, flux, graph.n)
    out = out + graph.tail * signed_power(rounded_difference(u, d), p)
    if potential:
        out = out + graph.c * signed_power(u, p)
    out = out / graph.m
    if graph.frontier:
        out[list(graph.frontier)] = np.nan
    return out


def _local_sum(graph: WeightedGraph, f, x, p: float) -> float:
    p = _check_p(p)
    if isinstance(graph, GeneratedGraph):
        graph = graph.truncate([x])
    i = graph.index[x]
    if i in graph.frontier:
        raise GraphError(f"neighbourhood of {x!r} is not materialised")
    u = as_values(graph, f)
    js, bs = graph.neighbor_indices(i)
    terms = bs * signed_power(u[i] - u[js], p)
    total = math.fsum(terms)
    if graph.tail[i]:
        total += graph.tail[i] * signed_power(u[i] - _default_of(f), p)
    if not math.isfinite(total):
        raise NotInFpError(f"not in F^p at {x!r}")
    return total


def p_laplacian(graph: WeightedGraph, f, x: Hashable, p: float) -> float:
    """``Δ_p f(x) = m(x)^{-1} Σ_y b(x,y) <f(x) - f(y)>``."""
    if isinstance(graph, GeneratedGraph):
        graph = graph.truncate([x])
    return _local_sum(graph, f, x, p) / graph.m[graph.index[x]]


def schroedinger(graph: WeightedGraph, f, x: Hashable, p: float) -> float:
    """``L_p f(x) = Δ_p f(x) + c(x)/m(x) <f(x)>``."""
    if isinstance(graph, GeneratedGraph):
        graph = graph.truncate([x])
    i = graph.index[x]
    u = as_values(graph, f)
    return (_local_sum(graph, f, x, p) + graph.c[i] * signed_power(u[i], p)) / graph.m[i]


def p_energy(graph: WeightedGraph, f, p: float, region: Iterable[Hashable] | None = None) -> float:
    """``½ Σ b|∇f|^p + Σ c|f|^p``.

    With ``region`` the sums run over pairs in the region only (the restricted
    energy).  Without it the whole truncation is used, tail edges included;
    ``f`` must then equal its default on frontier vertices, where the energy is
    not determined by the materialised data.
    """
    p = _check_p(p)
    u = as_values(graph, f)
    if region is None:
        d = _default_of(f)
        if graph.frontier:
            fr = np.fromiter(graph.frontier, dtype=np.int64)
            if np.any(u[fr] != d):
                raise GraphError("energy is not determined: function differs from its default on the frontier")
        i, j = graph.edges[:, 0], graph.edges[:, 1]
        terms = [graph.weights * np.abs(u[i] - u[j]) ** p, graph.c * np.abs(u) ** p,
                 graph.tail * np.abs(u - d) ** p]
        return math.fsum(np.concatenate(terms))
    mask = graph.mask(region)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    keep = mask[i] & mask[j]
    terms = [graph.weights[keep] * np.abs(u[i[keep]] - u[j[keep]]) ** p,
             graph.c[mask] * np.abs(u[mask]) ** p]
    return math.fsum(np.concatenate(terms))


def energy_pairing(graph: WeightedGraph, u, v, region: Iterable[Hashable], p: float) -> float:
    """``½ Σ_{x,y ∈ region} b <∇u> ∇v + Σ_{x ∈ region} c <u> v``."""
    p = _check_p(p)
    uu, vv = as_values(graph, u), as_values(graph, v)
    mask = graph.mask(region)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    keep = mask[i] & mask[j]
    i, j = i[keep], j[keep]
    # each unordered edge carries both ordered terms, which are equal
    terms = [graph.weights[keep] * signed_power(uu[i] - uu[j], p) * (vv[i] - vv[j]),
             graph.c[mask] * signed_power(uu[mask], p) * vv[mask]]
    total = math.fsum(np.concatenate(terms))
    if not math.isfinite(total):
        raise NotInFpError("pairing diverges")
    return total


def greens_formula_residual(graph: WeightedGraph, f, phi, V: Iterable[Hashable], p: float) -> float:
    """``<L_p f, φ>_V - 𝓔_{p,V}(f, φ) - Σ_{x∈V, y∈∂_eV} b <∇f> φ(x)``.

    ``φ`` must vanish off ``V``.  Zero up to rounding.
    """
    p = _check_p(p)
    V = list(V)
    u, w = as_values(graph, f), as_values(graph, phi)
    mask = graph.mask(V)
    if np.any(w[~mask] != 0):
        raise GraphError("test function must vanish off V")
    d = _default_of(f)
    lp = laplacian_values(graph, VertexFunction.from_array(graph, u, default=d), p, potential=True)
    if np.any(np.isnan(lp[mask])):
        raise GraphError("V touches the truncation frontier")
    lhs = math.fsum(lp[mask] * w[mask] * graph.m[mask])
    inner = energy_pairing(graph, u, w, V, p)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    cross_ij = mask[i] & ~mask[j]
    cross_ji = mask[j] & ~mask[i]
    bterms = [graph.weights[cross_ij] * signed_power(u[i[cross_ij]] - u[j[cross_ij]], p) * w[i[cross_ij]],
              graph.weights[cross_ji] * signed_power(u[j[cross_ji]] - u[i[cross_ji]], p) * w[j[cross_ji]],
              (graph.tail * signed_power(u - d, p) * w)[mask]]
    return lhs - inner - math.fsum(np.concatenate(bterms))


def diagnostic_norm(graph: WeightedGraph, f, o: Hashable, p: float) -> float:
    """``(𝓔_p(f) + |f(o)|^p)^{1/p}``, reported as a scalar diagnostic only."""
    u = as_values(graph, f)
    return (p_energy(graph, f, p) + abs(u[graph.index[o]]) ** p) ** (1.0 / p)


# ---------------------------------------------------------------------------
# ends

@dataclass(frozen=True)
class Component:
    vertices: tuple
    escapes: bool
    kind: str = "materialised"
    via: Hashable | None = None


def ends(graph: WeightedGraph | GeneratedGraph, K: Iterable[Hashable], n: int) -> list[Component]:
    """Connected components of ``B_n(K) ∖ K``, flagged by whether they reach the horizon.

    Unmaterialised neighbours of ``K`` (tail weight) are reported as one
    escaping pseudo-component per vertex of ``K``.
    """
    if n < 1:
        raise ValueError("horizon must be >= 1")
    K = sorted(set(K), key=vertex_key)
    if isinstance(graph, GeneratedGraph):
        dist = graph.distances(n, K) if not _has_tail(graph, K) else _tail_safe_distances(graph, K, n)
        trunc = graph.truncate(dist)
    else:
        dist = ball(graph, K, n)
        trunc = graph
    inside = set(dist) - set(K)
    comps, seen = [], set()
    for s in sorted(inside, key=vertex_key):
        if s in seen:
            continue
        comp, queue, escapes = [], deque([s]), False
        seen.add(s)
        while queue:
            x = queue.popleft()
            comp.append(x)
            i = trunc.index[x]
            if i in trunc.frontier or trunc.tail[i] > 0:
                escapes = True
            for y, _ in trunc.neighbors(x):
                if y in inside and y not in seen:
                    seen.add(y)
                    queue.append(y)
                elif y not in dist:
                    escapes = True
        comps.append(Component(tuple(sorted(comp, key=vertex_key)), escapes))
    for k in K:
        if k in trunc.index and trunc.tail[trunc.index[k]] > 0:
            comps.append(Component((), True, kind="tail", via=k))
    return comps


def _has_tail(graph: GeneratedGraph, K) -> bool:
    return any(graph.neighborhood(k)[1] > 0 for k in K)


def _tail_safe_distances(graph: GeneratedGraph, K, n) -> dict:
    dist = {k: 0 for k in K}
    queue = deque(K)
    while queue:
        x = queue.popleft()
        if dist[x] >= n:
            continue
        nbrs, tail = graph.neighborhood(x)
        if tail > 0 and x not in K:
            raise GraphError(f"{x!r} has infinitely many neighbours outside K")
        for y, _ in nbrs:
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def random_graph(rng: np.random.Generator, n: int, wmin: float = 0.1, wmax: float = 10.0,
                 potential: bool = False) -> WeightedGraph:
    """Connected random graph on ``0..n-1``: a random spanning tree plus extra edges.

    Weights are uniform in ``[wmin, wmax]``, measures in ``[0.5, 2]``; with
    ``potential`` about a third of the vertices get ``c`` uniform in ``[0, 1]``.
    """
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges[(u, v)] = float(rng.uniform(wmin, wmax))
    for _ in range(int(rng.integers(0, n + 1))):
        a, b = sorted(int(t) for t in rng.choice(n, size=2, replace=False)) if n > 1 else (0, 0)
        if a != b:
            edges[(a, b)] = float(rng.uniform(wmin, wmax))
    m = {v: float(rng.uniform(0.5, 2.0)) for v in range(n)}
    c = {v: (float(rng.uniform(0, 1)) if potential and rng.random() < 0.3 else 0.0) for v in range(n)}
    return WeightedGraph.build([(a, b, w) for (a, b), w in edges.items()], m=m, c=c,
                               vertices=range(n), root=0)


def iter_pairs(graph: WeightedGraph) -> Iterator[tuple[Hashable, Hashable, float]]:
    for (i, j), b in zip(graph.edges, graph.weights):
        yield graph.vertices[i], graph.vertices[j], float(b)
