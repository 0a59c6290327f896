"""Capacities, equilibrium potentials, Green's functions and classification.

Every infinite-graph quantity here is computed along an exhaustion
``X_0 ⊆ X_1 ⊆ ...`` and reported together with the stage it came from.
``cap(K, X_n)`` is always an upper bound for the capacity of ``K`` in the
whole graph, and decreases to it.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

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
from .models import (
    Certificate,
    InconclusiveError,
    ParabolicSignal,
    area_series_test,
    expected_label,
    family_certificate,
    profile_of,
    radial_capacity,
)
from .solvers import DEFAULT_TOL, DirichletProblem, ObstacleProblem, solve_dirichlet, solve_obstacle

__all__ = [
    "ParabolicSignal",
    "InconclusiveError",
    "NoHardyWeight",
    "NoPoincareConstant",
    "CapacityResult",
    "Stage",
    "PotentialSequence",
    "Extrapolation",
    "GreenEstimate",
    "Verdict",
    "ClassifyPolicy",
    "NullSequence",
    "HardyWeight",
    "capacity",
    "capacity_limit",
    "harmonic_potential",
    "greens_function",
    "extrapolate",
    "classify",
    "null_sequence",
    "hardy_weight",
    "hardy_gap",
    "poincare_constant",
    "liouville_probe",
    "strong_subadditivity_search",
    "stage_sets",
    "thread_count",
]

PARABOLIC, HYPERBOLIC, INCONCLUSIVE = "parabolic", "hyperbolic", "inconclusive"


class NoHardyWeight(GraphError):
    """The graph is parabolic: no positive Hardy weight exists."""


class NoPoincareConstant(GraphError):
    """The graph is parabolic: no Poincaré constant exists."""


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("PGRAPH_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# single capacities

@dataclass
class CapacityResult:
    value: float
    minimizer: VertexFunction
    K: tuple
    region: tuple
    p: float
    residual: float = 0.0
    converged: bool = True

    def to_json(self) -> dict:
        return {"cap": self.value, "p": self.p, "K": [_jid(k) for k in self.K],
                "region_size": len(self.region), "residual": self.residual,
                "converged": self.converged}


def _jid(v):
    return list(v) if isinstance(v, tuple) else v


def _materialise(G, V):
    if isinstance(G, GeneratedGraph):
        return G.truncate(V)
    return G


def capacity(G: WeightedGraph | GeneratedGraph, K: Iterable[Hashable], V: Iterable[Hashable],
             p: float, tol: float = DEFAULT_TOL, method: str = "newton",
             truncation: WeightedGraph | None = None) -> CapacityResult:
    """``cap_p(K, V)``: energy of the function that is 1 on K, 0 off V, p-harmonic between.

    Parameters
    ----------
    G : WeightedGraph or GeneratedGraph
        Generated graphs are truncated to the closure of ``V``.
    K, V : iterables of vertex ids
        Finite sets with ``K ⊆ V``.
    truncation : WeightedGraph, optional
        Precomputed truncation containing the closure of ``V``.
    """
    K = sorted(set(K), key=vertex_key)
    V = sorted(set(V), key=vertex_key)
    Vs = set(V)
    if not set(K) <= Vs:
        raise GraphError("K must be contained in V")
    T = truncation if truncation is not None else _materialise(G, V)
    free = [v for v in V if v not in set(K)]
    data = {k: 1.0 for k in K}
    rep = solve_dirichlet(DirichletProblem(T, free, VertexFunction(data, 0.0), p), tol=tol,
                          method=method)
    u = rep.values
    value = p_energy(T, VertexFunction.from_array(T, u, 0.0), p)
    sol = VertexFunction({T.vertices[i]: float(u[i]) for i in np.flatnonzero(u)}, 0.0)
    return CapacityResult(value, sol, tuple(K), tuple(V), float(p), rep.residual, rep.converged)


# ---------------------------------------------------------------------------
# exhaustions

def stage_sets(G, K: Sequence[Hashable] | None, N: int) -> list[list]:
    """Stages ``X_0..X_N``: the graph's own exhaustion, or balls about ``K``."""
    if isinstance(G, GeneratedGraph):
        if K is None or list(K) == [G.root]:
            return [G.stage(n) for n in range(N + 1)]
        dist = G.distances(N, K)
        return [sorted((v for v, d in dist.items() if d <= n), key=vertex_key) for n in range(N + 1)]
    K = list(K) if K is not None else [G.root if G.root is not None else G.vertices[0]]
    dist = ball(G, K, N)
    return [sorted((v for v, d in dist.items() if d <= n), key=vertex_key) for n in range(N + 1)]


@dataclass
class Stage:
    n: int
    n_vertices: int
    cap: float
    u: VertexFunction = field(repr=False)
    du_inf: float = 0.0
    runtime_ms: float = 0.0
    residual: float = 0.0


@dataclass
class Extrapolation:
    limit: float
    method: str
    residual: float
    candidates: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"limit": self.limit, "method": self.method, "residual": self.residual,
                "candidates": self.candidates}


@dataclass
class PotentialSequence:
    K: tuple
    p: float
    stages: list
    truncation: WeightedGraph = field(repr=False)
    monotone_cap: bool = True
    monotone_u: bool = True
    extrapolation: Extrapolation | None = None

    @property
    def caps(self) -> list[float]:
        return [s.cap for s in self.stages]

    def csv_rows(self, timing: bool = True) -> list[str]:
        rows = ["stage,n_vertices,cap,du_inf,runtime_ms"]
        for s in self.stages:
            rt = f"{s.runtime_ms:.3f}" if timing else ""
            rows.append(f"{s.n},{s.n_vertices},{s.cap!r},{s.du_inf!r},{rt}")
        return rows

    def to_json(self) -> dict:
        return {"K": [_jid(k) for k in self.K], "p": self.p,
                "stages": [{"n": s.n, "n_vertices": s.n_vertices, "cap": s.cap, "du_inf": s.du_inf,
                            "residual": s.residual} for s in self.stages],
                "monotone_cap": self.monotone_cap, "monotone_u": self.monotone_u,
                "extrapolation": self.extrapolation.to_json() if self.extrapolation else None}


def capacity_limit(G, K: Sequence[Hashable] | None, p: float, N: int, tol: float = DEFAULT_TOL,
                   stages: list | None = None, method: str = "newton") -> PotentialSequence:
    """Capacities ``cap(K, X_n)`` for ``n = 0..N`` with monotonicity checks and a limit estimate."""
    if N < 0:
        raise ValueError("need N >= 0")
    sets = stages if stages is not None else stage_sets(G, K, N)
    if K is None:
        K = [origin(G)]
    K = sorted(set(K), key=vertex_key)
    if not set(K) <= set(sets[0]):
        raise GraphError("K must be contained in the first stage")
    T = _materialise(G, sets[-1])
    Kset = set(K)
    data = VertexFunction({k: 1.0 for k in K}, 0.0)

    def solve(Xn):
        t0 = time.perf_counter()
        free = [v for v in Xn if v not in Kset]
        rep = solve_dirichlet(DirichletProblem(T, free, data, p), tol=tol, method=method)
        cap = p_energy(T, VertexFunction.from_array(T, rep.values, 0.0), p)
        return rep, cap, (time.perf_counter() - t0) * 1e3

    results = _map(solve, sets)
    out, prev = [], None
    mono_u, mono_cap = True, True
    for n, (Xn, (rep, cap, ms)) in enumerate(zip(sets, results)):
        u = rep.values
        du = float(np.max(np.abs(u - prev))) if prev is not None else 0.0
        if prev is not None:
            mono_u &= bool(np.all(prev <= u + 10 * tol))
            mono_cap &= cap <= out[-1].cap + 10 * tol
        vf = VertexFunction({T.vertices[i]: float(u[i]) for i in np.flatnonzero(u)}, 0.0)
        out.append(Stage(n, len(Xn), cap, vf, du, ms, rep.residual))
        prev = u
    seq = PotentialSequence(tuple(K), float(p), out, T, mono_cap, mono_u)
    seq.extrapolation = extrapolate(list(range(len(out))), seq.caps)
    return seq


def harmonic_potential(G, o: Hashable | None, p: float, N: int, tol: float = DEFAULT_TOL,
                       stages: list | None = None) -> PotentialSequence:
    """Equilibrium potentials ``u_n`` of ``o`` in ``X_n``: ``u_n(o)=1``, ``u_n=0`` off ``X_n``."""
    o = o if o is not None else origin(G)
    return capacity_limit(G, [o], p, N, tol, stages)


# ---------------------------------------------------------------------------
# extrapolation

def _fit(x, y):
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef


def _predictors(ns: np.ndarray, caps: np.ndarray):
    """Limit estimators; each maps (ns, caps) -> (limit, prediction of next cap)."""

    def aitken(n, c):
        if len(c) < 3:
            return c[-1], c[-1]
        a, b, d = c[-3], c[-2], c[-1]
        den = (d - b) - (b - a)
        if den == 0 or b == a:
            return d, d
        lim = d - (d - b) ** 2 / den
        q = (d - b) / (b - a)
        return lim, d + (d - b) * q

    def harmonic(n, c):
        a, b = _fit(n, 1.0 / c)
        if b <= 0:
            return math.nan, math.nan
        return 0.0, 1.0 / (a + b * (n[-1] + 1))

    def logarithmic(n, c):
        a, b = _fit(np.log(n + 2.0), 1.0 / c)
        if b <= 0:
            return math.nan, math.nan
        return 0.0, 1.0 / (a + b * math.log(n[-1] + 3.0))

    def power(n, c):
        a, b = _fit(np.log(n + 1.0), np.log(c))
        if b >= 0:
            return math.nan, math.nan
        return 0.0, math.exp(a + b * math.log(n[-1] + 2.0))

    return {"aitken": aitken, "harmonic": harmonic, "logarithmic": logarithmic, "power": power}


def extrapolate(ns: Sequence[float], caps: Sequence[float]) -> Extrapolation:
    """Estimate ``lim cap_n`` by the candidate with the smallest leave-last-out error.

    Candidates: Aitken's Δ² on the last three values, ``1/cap`` linear in ``n``
    (harmonic decay), ``1/cap`` linear in ``log n`` and a power law; the last
    three extrapolate to 0.
    """
    ns = np.asarray(ns, dtype=float)
    caps = np.asarray(caps, dtype=float)
    if len(caps) == 0:
        raise ValueError("empty sequence")
    if len(caps) < 4 or np.any(caps <= 0):
        return Extrapolation(float(caps[-1]), "last", math.inf)
    tail = slice(max(0, len(caps) - 8), None)
    n_t, c_t = ns[tail], caps[tail]
    cands = {}
    for name, fn in _predictors(ns, caps).items():
        lim_prev, pred = fn(n_t[:-1], c_t[:-1])
        lim, _ = fn(n_t, c_t)
        if not (math.isfinite(pred) and math.isfinite(lim)):
            continue
        err = abs(pred - c_t[-1]) / c_t[-1]
        cands[name] = {"limit": float(max(lim, 0.0)), "holdout_error": float(err)}
    if not cands:
        return Extrapolation(float(caps[-1]), "last", math.inf)
    best = min(cands, key=lambda k: (cands[k]["holdout_error"], k))
    return Extrapolation(cands[best]["limit"], best, cands[best]["holdout_error"], cands)


# ---------------------------------------------------------------------------
# classification

@dataclass
class ClassifyPolicy:
    stages: int = 12
    threshold: float = 1e-3
    rel_change: float = 1e-3
    tol: float = DEFAULT_TOL
    capacity_evidence: bool = False


@dataclass
class Verdict:
    label: str
    evidence: list = field(default_factory=list)
    expected: str | None = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if self.label != INCONCLUSIVE and not self.evidence:
            raise ValueError("a definitive label needs at least one certificate")

    def to_json(self) -> dict:
        return {"label": self.label, "expected": self.expected, "notes": list(self.notes),
                "evidence": [e.to_json() for e in self.evidence]}


def _capacity_rule(seq: PotentialSequence, pol: ClassifyPolicy) -> tuple[str, Certificate]:
    caps = seq.caps
    ext = seq.extrapolation
    last = caps[-1]
    k = min(3, len(caps) - 1)
    rel = abs(caps[-1 - k] - last) / last if last > 0 and k > 0 else math.inf
    details = {"caps": caps, "extrapolation": ext.to_json() if ext else None,
               "relative_change_last3": rel, "monotone_cap": seq.monotone_cap,
               "threshold": pol.threshold}
    if last < pol.threshold and ext is not None and ext.limit <= pol.threshold / 10:
        # the minimisers themselves form the null sequence
        details["null_sequence_energies"] = caps
        return PARABOLIC, Certificate("capacity-decay", PARABOLIC, False, details)
    if last > pol.threshold and rel < pol.rel_change:
        return HYPERBOLIC, Certificate("capacity-plateau", HYPERBOLIC, False, details)
    return INCONCLUSIVE, Certificate("capacity-sequence", None, False, details)


def _finite_graph(G) -> bool:
    return isinstance(G, WeightedGraph) and not G.frontier and not np.any(G.tail > 0)


def classify(G, o: Hashable | None = None, p: float = 2.0,
             policy: ClassifyPolicy | Mapping | None = None) -> Verdict:
    """Parabolic / hyperbolic / inconclusive label with machine-checkable evidence.

    Order of evidence: a nonzero potential forces hyperbolicity; finite graphs
    are parabolic; model families use the exact series test; star-type families
    use closed-form certificates; everything else uses capacity decay along the
    exhaustion.  Numerics alone never yield a parabolic label: the decaying
    minimisers are reported as the null sequence that backs it.
    """
    pol = policy if isinstance(policy, ClassifyPolicy) else ClassifyPolicy(**dict(policy or {}))
    if not p > 1:
        raise ValueError("p must be > 1")
    has_c = bool(np.any(G.c > 0)) if isinstance(G, WeightedGraph) else G.has_potential()
    if has_c:
        return Verdict(HYPERBOLIC, [Certificate("nonzero-potential", HYPERBOLIC, True,
                                                {"argument": "c > 0 somewhere gives positive capacity"})])
    if _finite_graph(G):
        return Verdict(PARABOLIC, [Certificate("finite-graph", PARABOLIC, True,
                                               {"null_sequence": "constant 1, energy 0"})])
    spec = getattr(G, "spec", None)
    expected = expected_label(spec, p) if spec is not None else None
    if spec is not None:
        prof = profile_of(spec, R=max(64, pol.stages))
        if prof is not None:
            series = area_series_test(prof, p)
            label = series.label if series.verdict != "inconclusive" else INCONCLUSIVE
            ns = sorted({min(pol.stages, k) for k in (0, 1, 2, 4, 8, 16, 32, 64, 100, 128, 200, pol.stages)})
            caps = [[n, radial_capacity(prof, p, n)] for n in ns]
            ev = [Certificate("area-series", label if label != INCONCLUSIVE else None, series.exact,
                              {"series": series.to_json(), "radial_capacities": caps})]
            if pol.capacity_evidence:
                seq = capacity_limit(G, None, p, min(pol.stages, 8), pol.tol)
                ev.append(Certificate("capacity-sequence", None, False, {"caps": seq.caps}))
            return Verdict(label, ev if label != INCONCLUSIVE or ev else [], expected)
        cert = family_certificate(G, p, pol.stages)
        if cert is not None and cert.label is not None:
            return Verdict(cert.label, [cert], expected)
    try:
        seq = capacity_limit(G, [o] if o is not None else None, p, pol.stages, pol.tol)
    except GraphError as exc:
        return Verdict(INCONCLUSIVE, [], expected, [f"capacity pipeline failed: {exc}"])
    label, cert = _capacity_rule(seq, pol)
    notes = []
    if spec is not None and spec.family == "lattice":
        notes.append(f"expected label {expected} from the lattice dimension test; slow convergence")
        cert.details["strictly_decreasing"] = all(a > b for a, b in zip(seq.caps, seq.caps[1:]))
    return Verdict(label, [cert], expected, notes)


# ---------------------------------------------------------------------------
# Green's function

@dataclass
class GreenEstimate:
    g: VertexFunction
    scale: float
    cap_N: float
    cc_from_g: float
    root_residual: float
    harmonic_residual: float
    N: int
    sequence: PotentialSequence = field(repr=False)

    def __call__(self, x) -> float:
        return self.g(x)

    def to_json(self) -> dict:
        return {"scale": self.scale, "cap_N": self.cap_N, "cc_from_g": self.cc_from_g,
                "root_residual": self.root_residual, "harmonic_residual": self.harmonic_residual,
                "N": self.N}


def greens_function(G, o: Hashable | None, p: float, N: int, tol: float = DEFAULT_TOL,
                    policy: ClassifyPolicy | Mapping | None = None) -> GreenEstimate:
    """``g = c u_N`` with ``c = [m(o) Δ_p u_N(o)]^{-1/(p-1)}``.

    Raises ParabolicSignal when the graph is classified parabolic and
    InconclusiveError when the classification is undecided.
    """
    o = o if o is not None else origin(G)
    pol = policy if isinstance(policy, ClassifyPolicy) else ClassifyPolicy(**dict(policy or {}))
    pol = ClassifyPolicy(**{**pol.__dict__, "stages": max(pol.stages, N)})
    verdict = classify(G, o, p, pol)
    if verdict.label == PARABOLIC:
        raise ParabolicSignal("graph is parabolic: no Green's function")
    if verdict.label == INCONCLUSIVE:
        raise InconclusiveError("capacity decay unresolved at this stage")
    seq = harmonic_potential(G, o, p, N, tol)
    T = seq.truncation
    u = seq.stages[-1].u
    lap = laplacian_values(T, u, p) * T.m
    io = T.index[o]
    flux = float(lap[io])
    c = flux ** (-1.0 / (p - 1.0))
    g = VertexFunction({x: c * v for x, v in u.support.items()}, 0.0)
    glap = laplacian_values(T, g, p)
    inner = [T.index[x] for x in seq.stages[-1].u.support if x != o]
    harm = float(np.max(np.abs(glap[inner]))) if inner else 0.0
    root_res = abs(T.m[io] * glap[io] - 1.0)
    return GreenEstimate(g, c, seq.stages[-1].cap, g(o) ** -(p - 1.0), root_res, harm, N, seq)


# ---------------------------------------------------------------------------
# null sequences, Hardy weights, Poincaré constants

@dataclass
class NullSequence:
    functions: list = field(repr=False)
    energies: list = field(default_factory=list)
    decays: bool = False

    def scaled_energies(self, alpha: float, p: float) -> list[float]:
        """Energies of ``e_n / alpha``: ``alpha^{-p}`` times the originals."""
        return [alpha ** -p * e for e in self.energies]


def null_sequence(G, o: Hashable | None, p: float, N: int, tol: float = DEFAULT_TOL,
                  threshold: float = 1e-3) -> NullSequence:
    """Capacity minimisers ``e_n`` (``e_n(o)=1``, support in ``X_n``) with energies ``cap_n``."""
    seq = harmonic_potential(G, o, p, N, tol)
    caps = seq.caps
    decays = seq.extrapolation is not None and seq.extrapolation.limit <= threshold
    return NullSequence([s.u for s in seq.stages], caps, bool(decays))


def _known_parabolic(G, p) -> bool:
    if isinstance(G, WeightedGraph):
        return False
    return classify(G, None, p).label == PARABOLIC


@dataclass
class HardyWeight:
    weights: dict
    capacities: dict
    region: tuple

    def __call__(self, x) -> float:
        return self.weights.get(x, 0.0)


def hardy_weight(G, p: float, vertices: Sequence[Hashable], alphas: Sequence[float],
                 V: Iterable[Hashable], tol: float = DEFAULT_TOL) -> HardyWeight:
    """``μ = Σ α_x cap_p(x, V) 1_x``: ``Σ μ|φ|^p <= 𝓔_p(φ)`` for φ supported in ``V``."""
    alphas = [float(a) for a in alphas]
    if len(alphas) != len(vertices) or any(a < 0 for a in alphas) or abs(sum(alphas) - 1) > 1e-12:
        raise ValueError("weights must be non-negative and sum to 1")
    if _known_parabolic(G, p):
        raise NoHardyWeight("no Hardy weight exists on a parabolic graph")
    V = sorted(set(V), key=vertex_key)
    T = _materialise(G, V)
    caps = {x: capacity(G, [x], V, p, tol, truncation=T).value for x in vertices}
    if all(c <= 1e-12 for c in caps.values()):
        raise NoHardyWeight("all capacities vanish")
    mu = {x: a * caps[x] for x, a in zip(vertices, alphas)}
    return HardyWeight(mu, caps, tuple(V))


def hardy_gap(G: WeightedGraph, mu: HardyWeight, phi, p: float) -> float:
    """``𝓔_p(φ) - Σ μ|φ|^p`` (non-negative for a valid weight)."""
    u = as_values(G, phi)
    lhs = math.fsum(w * abs(u[G.index[x]]) ** p for x, w in mu.weights.items())
    return p_energy(G, phi, p) - lhs


def poincare_constant(G, K: Sequence[Hashable], p: float, V: Iterable[Hashable],
                      tol: float = DEFAULT_TOL) -> float:
    """``Σ_{x ∈ K} cap_p(x, V)^{-1}``, so that ``Σ_K |φ|^p <= C 𝓔_p(φ)`` on ``V``."""
    if _known_parabolic(G, p):
        raise NoPoincareConstant("no Poincaré constant exists on a parabolic graph")
    V = sorted(set(V), key=vertex_key)
    T = _materialise(G, V)
    total = []
    for x in K:
        c = capacity(G, [x], V, p, tol, truncation=T).value
        if c <= 1e-12:
            raise NoPoincareConstant(f"capacity of {x!r} vanishes")
        total.append(1.0 / c)
    return math.fsum(total)


# ---------------------------------------------------------------------------
# experiments

def liouville_probe(G, p: float, ns: Sequence[int], radius: int = 2,
                    tol: float = DEFAULT_TOL) -> list[tuple[int, float]]:
    """Oscillation on a fixed ball of non-negative superharmonic obstacle solutions.

    For each ``n`` the obstacle problem on ``X_n`` with obstacle ``1_o`` and
    zero boundary data is solved; on parabolic graphs the oscillation over
    ``B_radius(o)`` tends to zero as ``n`` grows.
    """
    out = []
    o = origin(G)
    for n in ns:
        Xn = stage_sets(G, None, n)[-1]
        T = _materialise(G, Xn)
        rep = solve_obstacle(ObstacleProblem(T, Xn, VertexFunction({o: 1.0}, 0.0), 0.0, p), tol=tol)
        near = sorted(ball(T, [o], radius), key=vertex_key)
        vals = rep.values[T.indices(near)]
        out.append((n, float(vals.max() - vals.min())))
    return out


def strong_subadditivity_search(G: WeightedGraph, V: Sequence[Hashable], p: float,
                                trials: int = 50, seed: int = 0,
                                tol: float = DEFAULT_TOL) -> list[dict]:
    """Random search for ``cap(K1∪K2) + cap(K1∩K2) > cap(K1) + cap(K2)``.

    Experimental: returns every trial with its gap (positive gap = violation).
    """
    rng = np.random.default_rng(seed)
    V = sorted(set(V), key=vertex_key)
    T = _materialise(G, V)
    cache: dict[frozenset, float] = {frozenset(): 0.0}

    def cap(S):
        S = frozenset(S)
        if S not in cache:
            cache[S] = capacity(T, sorted(S, key=vertex_key), V, p, tol, truncation=T).value
        return cache[S]

    out = []
    for _ in range(trials):
        k1 = rng.integers(1, max(2, len(V) // 2) + 1)
        k2 = rng.integers(1, max(2, len(V) // 2) + 1)
        K1 = set(rng.choice(len(V), size=min(k1, len(V)), replace=False).tolist())
        K2 = set(rng.choice(len(V), size=min(k2, len(V)), replace=False).tolist())
        A = {V[i] for i in K1}
        B = {V[i] for i in K2}
        lhs = cap(A | B) + cap(A & B)
        rhs = cap(A) + cap(B)
        out.append({"K1": sorted(map(str, A)), "K2": sorted(map(str, B)), "lhs": lhs, "rhs": rhs,
                    "gap": lhs - rhs})
    return out
