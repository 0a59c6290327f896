"""Nonlinear Dirichlet and obstacle problems on finite regions.

Both problems minimise the strictly convex functional

    J(u) = 1/p [ Σ_{edges meeting V} b |∇u|^p + Σ_V c |u|^p + Σ_V tail |u - d|^p ]

over the free values on ``V`` (subject to ``u >= ψ`` for the obstacle
problem).  Its gradient is ``m · L_p u`` on ``V``, so stationarity is
p-harmonicity.

Two methods are provided.  ``"newton"`` (default) takes damped Newton steps
on the whole region with a regularised Hessian, an Armijo line search on J and,
for obstacles, a projected active-set variant; ``"gauss_seidel"`` sweeps the
vertices in canonical order and solves each scalar monotone equation exactly.
Newton falls back to Gauss-Seidel sweeps if its line search stagnates.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from .graph import (ROUND, GraphError, VertexFunction, WeightedGraph, as_values, laplacian_values,
                    rounded_difference, signed_power, vertex_key)

__all__ = [
    "InfeasibleProblemError",
    "DirichletProblem",
    "ObstacleProblem",
    "SolverReport",
    "solve_dirichlet",
    "solve_obstacle",
    "superharmonic_report",
    "SuperharmonicReport",
    "comparison_check",
    "ComparisonResult",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10 ** 6


class InfeasibleProblemError(GraphError):
    pass


@dataclass
class DirichletProblem:
    """Find ``u`` p-harmonic (``L_p u = 0``) on ``region`` with ``u = boundary`` elsewhere.

    ``boundary`` is evaluated on every materialised vertex outside the region;
    its default value is used for unmaterialised (tail) neighbours.
    """

    graph: WeightedGraph
    region: Sequence[Hashable]
    boundary: VertexFunction | Mapping | np.ndarray | float = 0.0
    p: float = 2.0


@dataclass
class ObstacleProblem:
    """Minimise the energy over ``{v >= obstacle on region, v = boundary elsewhere}``."""

    graph: WeightedGraph
    region: Sequence[Hashable]
    obstacle: VertexFunction | Mapping | np.ndarray | float = -math.inf
    boundary: VertexFunction | Mapping | np.ndarray | float = 0.0
    p: float = 2.0


@dataclass
class SolverReport:
    solution: VertexFunction
    iterations: int
    residual: float
    energy: float
    converged: bool
    method: str = "newton"
    change: float = 0.0
    energies: list = field(default_factory=list, repr=False)
    values: np.ndarray | None = field(default=None, repr=False)
    runtime_ms: float = 0.0

    def to_json(self) -> dict:
        return {"iterations": self.iterations, "residual": self.residual, "energy": self.energy,
                "converged": self.converged, "method": self.method,
                "solution": self.solution.to_json()}


def _function_values(graph: WeightedGraph, data, default_fill: float) -> tuple[np.ndarray, float]:
    if isinstance(data, (int, float)) and not isinstance(data, bool):
        return np.full(graph.n, float(data)), float(data)
    if isinstance(data, VertexFunction):
        return as_values(graph, data), data.default
    if isinstance(data, Mapping):
        return as_values(graph, data, default=default_fill), default_fill
    return as_values(graph, data), default_fill


class _System:
    """Free-variable view of a region: gradient, energy and Hessian of J."""

    def __init__(self, graph: WeightedGraph, free: np.ndarray, u_full: np.ndarray, d: float,
                 p: float):
        self.graph, self.p, self.free, self.d = graph, float(p), free, float(d)
        self.n = len(free)
        pos = np.full(graph.n, -1, dtype=np.int64)
        pos[free] = np.arange(self.n)
        i, j = graph.edges[:, 0], graph.edges[:, 1]
        pi, pj = pos[i], pos[j]
        touch = (pi >= 0) | (pj >= 0)
        self.ei, self.ej, self.w = i[touch], j[touch], graph.weights[touch]
        self.pi, self.pj = pi[touch], pj[touch]
        self.mi, self.mj = self.pi >= 0, self.pj >= 0
        self.both = self.mi & self.mj
        self.c, self.t = graph.c[free], graph.tail[free]
        self.u = u_full.astype(float).copy()

    def full(self, x: np.ndarray) -> np.ndarray:
        u = self.u.copy()
        u[self.free] = x
        return u

    def _diff(self, x):
        u = self.full(x)
        return rounded_difference(u[self.ei], u[self.ej])

    def grad(self, x: np.ndarray) -> np.ndarray:
        p = self.p
        flux = self.w * signed_power(self._diff(x), p)
        g = np.bincount(self.pi[self.mi], flux[self.mi], self.n).astype(float)
        g -= np.bincount(self.pj[self.mj], flux[self.mj], self.n)
        g += self.c * signed_power(x, p) + self.t * signed_power(rounded_difference(x, self.d), p)
        return g

    def energy_terms(self, x: np.ndarray) -> np.ndarray:
        p = self.p
        return np.concatenate([self.w * np.abs(self._diff(x)) ** p, self.c * np.abs(x) ** p,
                               self.t * np.abs(x - self.d) ** p])

    def objective(self, x: np.ndarray) -> float:
        return float(np.sum(self.energy_terms(x))) / self.p

    def energy(self, x: np.ndarray) -> float:
        return math.fsum(self.energy_terms(x))

    def hessian(self, x: np.ndarray, eta: float, majorant: bool = False) -> sp.csc_matrix:
        """Regularised Hessian of J; ``majorant`` drops the factor p - 1.

        For p < 2 the majorant is the curvature of the quadratic that lies
        above each ``|t|^p`` term, so its full step never increases J.
        """
        p = self.p
        diff = self._diff(x)
        if p == 2.0:
            h = self.w.copy()
            hc, ht = self.c.copy(), self.t.copy()
        else:
            e = (p - 2.0) / 2.0
            k = 1.0 if majorant else p - 1.0
            h = k * self.w * (diff * diff + eta * eta) ** e
            hc = k * self.c * (x * x + eta * eta) ** e
            xd = x - self.d
            ht = k * self.t * (xd * xd + eta * eta) ** e
        diag = np.bincount(self.pi[self.mi], h[self.mi], self.n).astype(float)
        diag += np.bincount(self.pj[self.mj], h[self.mj], self.n)
        diag += hc + ht
        hb = h[self.both]
        rows = np.concatenate([np.arange(self.n), self.pi[self.both], self.pj[self.both]])
        cols = np.concatenate([np.arange(self.n), self.pj[self.both], self.pi[self.both]])
        vals = np.concatenate([diag, -hb, -hb])
        return sp.csc_matrix((vals, (rows, cols)), shape=(self.n, self.n))


def _residual(x, g, lo) -> float:
    if x.size == 0:
        return 0.0
    if lo is None:
        return float(np.max(np.abs(g)))
    active = x <= lo
    r = np.where(active, np.maximum(-g, 0.0), np.abs(g))
    return float(np.max(r))


def _solve(H, rhs):
    if H.shape[0] == 1:
        return rhs / H[0, 0]
    return spsolve(H, rhs)


def _newton(sysm: _System, x: np.ndarray, lo, tol: float, max_iter: int):
    energies = [sysm.objective(x)]
    scale = max(1.0, float(np.max(np.abs(sysm.u))) if sysm.u.size else 1.0)
    eta = 1e-9 * scale
    change = math.inf
    it = 0
    g = sysm.grad(x)
    res = _residual(x, g, lo)
    stalled = False
    best, since = res, 0
    while it < max_iter:
        if res <= tol:
            break
        if since > 50:
            # no real progress: hand over to the coordinate solver
            stalled = True
            break
        it += 1
        E0 = energies[-1]
        xn, En, step, accepted = _damped_step(sysm, x, g, lo, eta, scale, E0, res, False)
        if not accepted and sysm.p < 2.0:
            xn, En, step, accepted = _damped_step(sysm, x, g, lo, eta, scale, E0, res, True)
        if not accepted:
            stalled = True
            break
        change = float(np.max(np.abs(step))) if step.size else 0.0
        x = xn
        energies.append(En)
        g = sysm.grad(x)
        res = _residual(x, g, lo)
        if res < 0.99 * best:
            best, since = res, 0
        else:
            since += 1
        if change == 0.0 and res > tol:
            stalled = True
            break
    return x, res, it, energies, (0.0 if res <= tol and change == math.inf else change), stalled


def _direction(sysm: _System, x, g, lo, eta, scale, majorant):
    H = sysm.hessian(x, eta, majorant)
    if lo is None:
        return -_solve(H, g)
    natural = np.max(np.abs(x - np.maximum(x - g, lo))) if x.size else 0.0
    eps = min(1e-6 * scale, natural)
    act = (x - lo <= eps) & (g > 0)
    d = np.zeros_like(x)
    free = ~act
    if free.any():
        Hf = H[free][:, free]
        d[free] = -_solve(Hf.tocsc(), g[free])
    if act.any():
        d[act] = -g[act] / H.diagonal()[act]
    return d


def _damped_step(sysm: _System, x, g, lo, eta, scale, E0, res, majorant):
    """Backtracking line search along the (projected) Newton direction.

    The plain Newton direction only gets a full step; a failed full step
    falls through to the majorant direction when p < 2.
    """
    d = _direction(sysm, x, g, lo, eta, scale, majorant)
    alpha = 1.0
    tries = 60 if (majorant or sysm.p >= 2.0) else 1
    for _ in range(tries):
        xn = x + alpha * d
        if lo is not None:
            xn = np.maximum(xn, lo)
        En = sysm.objective(xn)
        step = xn - x
        if En <= E0 + 1e-4 * float(g @ step):
            return xn, En, step, True
        if En <= E0 + 1e-13 * (abs(E0) + 1e-300):
            gn = sysm.grad(xn)
            if _residual(xn, gn, lo) < res:
                return xn, En, step, True
        alpha *= 0.5
    return x, E0, np.zeros_like(x), False


def _scalar_root(vals, bs, c, t, d, p, lo_bound):
    """Solve Σ b<x-v> + c<x> + t<x-d> = 0 for x (strictly increasing in x)."""
    if p == 2.0:
        den = bs.sum() + c + t
        return (float(bs @ vals) + t * d) / den
    pts = list(vals)
    if c > 0:
        pts.append(0.0)
    if t > 0:
        pts.append(d)
    a, b = min(pts), max(pts)
    if a == b:
        return a
    if lo_bound is not None and lo_bound >= b:
        return lo_bound

    def phi(x):
        r = float(bs @ signed_power(x - vals, p))
        if c:
            r += c * signed_power(x, p)
        if t:
            r += t * signed_power(x - d, p)
        return r

    if lo_bound is not None and lo_bound > a and phi(lo_bound) >= 0:
        return lo_bound
    return brentq(phi, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _cluster_moves(sysm: _System, u: np.ndarray, nb, lo, gap: float) -> float:
    """Shift groups of adjacent free vertices with nearly equal values as one block.

    Single-coordinate updates separate or merge such groups very slowly when
    p < 2, because the energy is not twice differentiable where values
    coincide.  Groups are linked by edges whose difference is at most ``gap``;
    each group moves by the common shift that minimises the energy.
    """
    free = sysm.free
    a, b = u[sysm.ei], u[sysm.ej]
    scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    tie = sysm.both & (np.abs(a - b) <= np.maximum(gap, ROUND * scale))
    if not tie.any():
        return 0.0
    n = free.size
    adj = sp.csr_matrix((np.ones(int(tie.sum())), (sysm.pi[tie], sysm.pj[tie])), shape=(n, n))
    k, labels = connected_components(adj, directed=False)
    sizes = np.bincount(labels, minlength=k)
    change = 0.0
    for comp in np.flatnonzero(sizes > 1):
        members = np.flatnonzero(labels == comp)
        inside = set(free[members].tolist())
        # every term becomes w <s - v> in the common shift s
        vals, ws = [], []
        for m in members:
            i = free[m]
            js, bs = nb[m]
            keep = np.array([j not in inside for j in js], dtype=bool)
            vals += [u[js[keep]] - u[i], [-u[i]], [sysm.d - u[i]]]
            ws += [bs[keep], [sysm.c[m]], [sysm.t[m]]]
        vals, ws = np.concatenate(vals), np.concatenate(ws)
        keep = ws > 0
        if not keep.any():
            continue
        lb = None
        if lo is not None and np.isfinite(lo[members]).any():
            lb = float(np.max(lo[members] - u[free[members]]))
        shift = _scalar_root(vals[keep], ws[keep], 0.0, 0.0, 0.0, sysm.p, lb)
        if lb is not None and shift < lb:
            shift = lb
        change = max(change, abs(shift))
        u[free[members]] += shift
    return change


def _gauss_seidel(sysm: _System, x: np.ndarray, lo, tol: float, max_iter: int, energies: list,
                  it0: int = 0):
    graph = sysm.graph
    u = sysm.full(x)
    nb = [graph.neighbor_indices(int(i)) for i in sysm.free]
    lo_full = None if lo is None else lo
    best, since = math.inf, 0
    it = it0
    res = math.inf
    change = math.inf
    while it < max_iter:
        it += 1
        change = 0.0
        for k, i in enumerate(sysm.free):
            js, bs = nb[k]
            lb = None if lo_full is None or not np.isfinite(lo_full[k]) else float(lo_full[k])
            t = _scalar_root(u[js], bs, float(sysm.c[k]), float(sysm.t[k]), sysm.d, sysm.p, lb)
            if lb is not None and t < lb:
                t = lb
            change = max(change, abs(t - u[i]))
            u[i] = t
        if sysm.p < 2.0:
            change = max(change, _cluster_moves(sysm, u, nb, lo_full, change))
        x = u[sysm.free].copy()
        g = sysm.grad(x)
        res = _residual(x, g, lo)
        energies.append(sysm.objective(x))
        if res <= tol and change <= tol:
            break
        if res < best * (1 - 1e-12):
            best, since = res, 0
        else:
            since += 1
            if since > 200 and change < 1e-15:
                break
    return x, res, it, change


def _setup(graph: WeightedGraph, V, boundary, p):
    if not isinstance(graph, WeightedGraph):
        raise TypeError("solvers operate on a finite WeightedGraph; truncate generated graphs first")
    p = float(p)
    if not p > 1:
        raise ValueError(f"p must be > 1, got {p}")
    Vs = sorted(set(V), key=vertex_key)
    free = graph.indices(Vs)
    bad = [graph.vertices[i] for i in free if i in graph.frontier]
    if bad:
        raise InfeasibleProblemError(f"region touches the truncation frontier at {bad[0]!r}")
    theta, d = _function_values(graph, boundary, 0.0)
    if not np.all(np.isfinite(theta[np.setdiff1d(np.arange(graph.n), free)])):
        raise InfeasibleProblemError("boundary data must be finite")
    if free.size:
        _check_anchored(graph, free)
    return free, theta, d, p


def _check_anchored(graph: WeightedGraph, free: np.ndarray):
    mask = np.zeros(graph.n, dtype=bool)
    mask[free] = True
    sub = graph.adjacency[free][:, free]
    k, labels = connected_components(sub, directed=False)
    anchored = np.zeros(k, dtype=bool)
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    pos = np.full(graph.n, -1)
    pos[free] = np.arange(free.size)
    cross = mask[i] != mask[j]
    inner = np.where(mask[i[cross]], i[cross], j[cross])
    anchored[labels[pos[inner]]] = True
    extra = (graph.c[free] > 0) | (graph.tail[free] > 0)
    anchored[labels[extra]] = True
    if not anchored.all():
        raise InfeasibleProblemError("a component of the region has no boundary and no potential")


def _finish(graph, sysm, x, res, it, energies, change, tol, method, t0) -> SolverReport:
    u = sysm.full(x)
    sol = VertexFunction.from_array(graph, u, default=sysm.d)
    return SolverReport(sol, it, res, sysm.energy(x), bool(res <= tol), method, change, energies, u,
                        (time.perf_counter() - t0) * 1e3)


def _harmonic_guess(graph, free, theta, d):
    s2 = _System(graph, free, theta, d, 2.0)
    x0 = np.zeros(free.size)
    g = s2.grad(x0)
    return -_solve(s2.hessian(x0, 0.0), g)


def solve_dirichlet(prob: DirichletProblem, tol: float = DEFAULT_TOL,
                    max_iter: int = DEFAULT_MAX_ITER, method: str = "newton",
                    init=None) -> SolverReport:
    """Solve ``L_p u = 0`` on the region with the given boundary values."""
    t0 = time.perf_counter()
    graph = prob.graph
    free, theta, d, p = _setup(graph, prob.region, prob.boundary, prob.p)
    sysm = _System(graph, free, theta, d, p)
    if free.size == 0:
        return _finish(graph, sysm, np.zeros(0), 0.0, 0, [0.0], 0.0, tol, method, t0)
    x = _initial(graph, free, theta, d, None, method, init)
    if method == "newton" and init is None:
        x = _continuation(graph, free, theta, d, None, p, x)
    return _run(graph, sysm, x, None, tol, max_iter, method, t0)


def solve_obstacle(prob: ObstacleProblem, tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER, method: str = "newton",
                   init=None) -> SolverReport:
    """Minimise the energy over functions ``>= obstacle`` on the region."""
    t0 = time.perf_counter()
    graph = prob.graph
    free, theta, d, p = _setup(graph, prob.region, prob.boundary, prob.p)
    psi, _ = _function_values(graph, prob.obstacle, -math.inf)
    lo = psi[free]
    if np.any(np.isnan(lo)) or np.any(lo == math.inf):
        raise InfeasibleProblemError("obstacle must be < +inf")
    sysm = _System(graph, free, theta, d, p)
    if free.size == 0:
        return _finish(graph, sysm, np.zeros(0), 0.0, 0, [0.0], 0.0, tol, method, t0)
    x = np.maximum(_initial(graph, free, theta, d, lo, method, init), lo)
    if method == "newton" and init is None:
        x = _continuation(graph, free, theta, d, lo, p, x)
    if np.all(lo == -math.inf):
        lo = None
    return _run(graph, sysm, x, lo, tol, max_iter, method, t0)


def _continuation(graph, free, theta, d, lo, p, x, steps: int = 4):
    """Warm start for p < 2: loosely solve along p = 2 -> target.

    Newton from the linear (p = 2) guess converges slowly when p < 2 because
    small gradients deep inside the region are badly scaled; moving p in a few
    steps keeps each solve inside the fast regime.
    """
    if p >= 2.0 or x.size == 0:
        return x
    bound = None if lo is None or np.all(lo == -math.inf) else lo
    for k in range(1, steps):
        q = 2.0 + (p - 2.0) * k / steps
        x = _newton(_System(graph, free, theta, d, q), x, bound, 1e-6, 200)[0]
    return x


def _initial(graph, free, theta, d, lo, method, init):
    if init is not None:
        return as_values(graph, init)[free].astype(float)
    # both methods start from the linear (p = 2) solution: a constant start
    # glues neighbouring values together, which coordinate sweeps undo slowly
    # when p < 2
    return _harmonic_guess(graph, free, theta, d)


def _run(graph, sysm, x, lo, tol, max_iter, method, t0):
    if method == "newton":
        x, res, it, energies, change, stalled = _newton(sysm, x, lo, tol, max_iter)
        if res > tol and it < max_iter:
            x, res, it, change = _gauss_seidel(sysm, x, lo, tol, max_iter, energies, it)
            method = "newton+gauss_seidel"
    elif method == "gauss_seidel":
        energies = [sysm.objective(x)]
        x, res, it, change = _gauss_seidel(sysm, x, lo, tol, max_iter, energies)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _finish(graph, sysm, x, res, it, energies, change, tol, method, t0)


# ---------------------------------------------------------------------------
# verifiers

@dataclass
class SuperharmonicReport:
    labels: dict
    margins: dict
    superharmonic: bool
    subharmonic: bool
    harmonic: bool


def superharmonic_report(graph: WeightedGraph, u, V: Iterable[Hashable], p: float,
                         tol: float = DEFAULT_TOL) -> SuperharmonicReport:
    """Sign of ``m · L_p u`` on ``V`` with tolerance band ``tol``.

    Vertices whose neighbourhood is not materialised are labelled ``neither``.
    """
    lp = laplacian_values(graph, u, p, potential=True) * graph.m
    labels, margins = {}, {}
    for x in sorted(set(V), key=vertex_key):
        val = lp[graph.index[x]]
        margins[x] = float(val)
        if np.isnan(val):
            labels[x] = "neither"
        elif abs(val) <= tol:
            labels[x] = "harmonic"
        elif val > 0:
            labels[x] = "super"
        else:
            labels[x] = "sub"
    vals = list(labels.values())
    return SuperharmonicReport(labels, margins,
                               superharmonic=all(v in ("super", "harmonic") for v in vals),
                               subharmonic=all(v in ("sub", "harmonic") for v in vals),
                               harmonic=all(v == "harmonic" for v in vals))


@dataclass
class ComparisonResult:
    hypotheses_hold: bool
    conclusion_holds: bool
    witness: Hashable | None
    components: list


def comparison_check(graph: WeightedGraph, u, v, V: Iterable[Hashable], p: float,
                     tol: float = 1e-9) -> ComparisonResult:
    """Check the weak comparison principle and its strict dichotomy on ``V``.

    Hypotheses: ``L_p u <= L_p v`` on ``V`` and ``u <= v`` on ``∂_e V``.
    Conclusion: ``u <= v`` on ``V``, and on each component of ``V`` either
    ``u = v`` or ``u < v``.
    """
    V = sorted(set(V), key=vertex_key)
    uu, vv = as_values(graph, u), as_values(graph, v)
    lu = laplacian_values(graph, u, p, potential=True) * graph.m
    lv = laplacian_values(graph, v, p, potential=True) * graph.m
    idx = graph.indices(V)
    mask = np.zeros(graph.n, dtype=bool)
    mask[idx] = True
    witness = None
    hyp = True
    for i in idx:
        if not lu[i] <= lv[i] + tol:
            hyp, witness = False, graph.vertices[i]
            break
    if hyp:
        i, j = graph.edges[:, 0], graph.edges[:, 1]
        ext = np.unique(np.concatenate([j[mask[i] & ~mask[j]], i[mask[j] & ~mask[i]]]))
        for k in ext:
            if not uu[k] <= vv[k] + tol:
                hyp, witness = False, graph.vertices[k]
                break
    conclusion = True
    comps = []
    sub = graph.adjacency[idx][:, idx]
    k, labels = connected_components(sub, directed=False)
    for c in range(k):
        members = idx[labels == c]
        diff = vv[members] - uu[members]
        if np.max(np.abs(diff)) <= tol:
            comps.append("equal")
        elif np.min(diff) > 0:
            comps.append("strict")
        else:
            comps.append("violated")
            conclusion = False
            if witness is None:
                witness = graph.vertices[members[int(np.argmin(diff))]]
    return ComparisonResult(hyp, conclusion, witness, comps)
