"""Example families and exact radial machinery for model graphs.

A model graph is spherically symmetric about its root: the outer and inner
weighted degrees ``k_plus(r)``, ``k_minus(r)`` depend only on the distance
``r``.  Everything then reduces to the boundary areas

    ∂B(r) = m(S_r) k_plus(r) = total weight between spheres r and r+1,

and the terms ``a_r = ∂B(r)^{-1/(p-1)}``: the graph is p-parabolic iff
``Σ a_r`` diverges, the Green's function is ``g(r) = Σ_{k>=r} a_k`` and the
radial null sequence decreases by ``c_n a_r`` per step.

Weight and sphere-size sequences are given as small closed-form tokens
(``"1"``, ``"r+1"``, ``"(n+1)^2"``, ``"2^r"``, ``"0.5^k"``) or as explicit
tables; tokens carry their asymptotic class so series tests can be exact.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from itertools import count
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy import integrate, special

from .graph import GeneratedGraph, GraphError, VertexFunction, WeightedGraph

__all__ = [
    "ParabolicSignal",
    "InconclusiveError",
    "ClosedForm",
    "parse_sequence",
    "FamilySpec",
    "Tail",
    "RadialProfile",
    "Certificate",
    "FAMILIES",
    "generate",
    "profile_of",
    "profile_from_json",
    "radial_p_laplacian",
    "area_series_test",
    "SeriesResult",
    "radial_green",
    "GreenValue",
    "radial_green_values",
    "curvature_ratio_green",
    "radial_null_sequence",
    "RadialNullSequence",
    "radial_capacity",
    "lift_radial",
    "family_certificate",
    "expected_label",
]


class ParabolicSignal(Exception):
    """Raised where a Green's function is requested on a parabolic graph."""


class InconclusiveError(Exception):
    """The available truncation does not decide the question."""


# ---------------------------------------------------------------------------
# closed-form sequences

_NUM = r"[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?"
_VAR = r"[nrkx]"


@dataclass(frozen=True)
class ClosedForm:
    """``coef * (var + shift)^expo``, ``coef * base^(var + shift)`` or a table."""

    text: str
    kind: str
    coef: float = 1.0
    shift: float = 0.0
    expo: float = 0.0
    base: float = 1.0
    table: tuple = ()

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "poly":
            out = self.coef * (r + self.shift) ** self.expo
        elif self.kind == "geom":
            out = self.coef * self.base ** (r + self.shift)
        else:
            idx = r.astype(int)
            if np.any(idx >= len(self.table)) or np.any(idx < 0):
                raise GraphError(f"sequence {self.text!r} is tabulated only for 0..{len(self.table) - 1}")
            out = np.asarray(self.table, dtype=float)[idx]
        return float(out) if out.ndim == 0 else out

    @property
    def asymptotic(self) -> tuple[float, float] | None:
        """``(ratio, degree)`` with ``f(r) ~ C ratio^r r^degree``; None for tables."""
        if self.kind == "poly":
            return (1.0, self.expo)
        if self.kind == "geom":
            return (self.base, 0.0)
        return None

    def tail_sum(self, k0: int) -> float:
        """``Σ_{k >= k0} f(k)`` in closed form (inf when divergent)."""
        ratio, degree = self.asymptotic or (None, None)
        if self.kind == "geom":
            if self.base >= 1:
                return math.inf
            return self.coef * self.base ** (k0 + self.shift) / (1.0 - self.base)
        if self.kind == "poly":
            if self.expo >= -1:
                return math.inf
            return self.coef * float(special.zeta(-self.expo, k0 + self.shift))
        raise GraphError(f"no closed-form tail for {self.text!r}")

    def summable(self) -> bool:
        a = self.asymptotic
        if a is None:
            return False
        ratio, degree = a
        return ratio < 1 or (ratio == 1 and degree < -1)


def parse_sequence(token: str | Sequence[float] | ClosedForm) -> ClosedForm:
    """Parse a closed-form token such as ``"r+1"``, ``"(n+1)^2"`` or ``"2^r"``."""
    if isinstance(token, ClosedForm):
        return token
    if not isinstance(token, str):
        vals = tuple(float(v) for v in token)
        return ClosedForm(str(list(vals)), "table", table=vals)
    text = token
    s = token.replace(" ", "").replace("**", "^")
    coef = 1.0
    m = re.match(rf"({_NUM})\*(.+)\Z", s)
    if m:
        coef, s = float(m.group(1)), m.group(2)
    if re.fullmatch(_NUM, s):
        return ClosedForm(text, "poly", coef * float(s), 0.0, 0.0)
    m = re.fullmatch(rf"\(?{_VAR}(?:([+-]{_NUM}))?\)?(?:\^(-?{_NUM}))?", s)
    if m and (s.count("(") == s.count(")")):
        shift = float(m.group(1) or 0.0)
        expo = float(m.group(2)) if m.group(2) else 1.0
        return ClosedForm(text, "poly", coef, shift, expo)
    m = re.fullmatch(rf"({_NUM})\^(-?)\(?{_VAR}(?:([+-]{_NUM}))?\)?", s)
    if m:
        base = float(m.group(1))
        shift = float(m.group(3) or 0.0)
        if m.group(2):
            base = 1.0 / base
        if not base > 0:
            raise ValueError(f"geometric base must be positive in {text!r}")
        return ClosedForm(text, "geom", coef, shift, 0.0, base)
    raise ValueError(f"unsupported sequence token {text!r}")


# ---------------------------------------------------------------------------
# family specifications and generators

@dataclass(frozen=True)
class FamilySpec:
    family: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def describe(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.family}({inner})"


FAMILIES = ("star", "wheel", "starline", "line", "tree", "antitree", "lattice")

_DEFAULTS = {
    "star": {"w": "0.5^k"},
    "wheel": {"w": "0.5^k", "rim": "1"},
    "starline": {"w": "0.5^k", "b": "1"},
    "line": {"b": "1"},
    "tree": {"d": 2},
    "antitree": {"s": "r+1"},
    "lattice": {"d": 2},
}


def _params(spec: FamilySpec) -> dict:
    if spec.family not in FAMILIES:
        raise ValueError(f"unknown family {spec.family!r}; choose from {', '.join(FAMILIES)}")
    out = dict(_DEFAULTS[spec.family])
    out.update({k: v for k, v in spec.params.items() if v is not None})
    return out


def _positive(seq: ClosedForm, name: str, upto: int = 64):
    vals = np.atleast_1d(seq(np.arange(1 if name == "w" else 0, upto)))
    if np.any(~(vals > 0)):
        raise ValueError(f"sequence {name}={seq.text!r} must be positive")


def generate(spec: FamilySpec, neighbor_cap: int = 4096) -> GeneratedGraph:
    """Neighbour oracle for an example family."""
    prm = _params(spec)
    fam = spec.family
    if fam == "tree":
        d = int(prm["d"])
        if d < 1:
            raise ValueError("tree needs d >= 1")

        def nbrs(x):
            if x:
                yield x[:-1], 1.0
            for i in range(d):
                yield x + (i,), 1.0

        g = GeneratedGraph(f"tree(d={d})", (), nbrs, params=prm, neighbor_cap=neighbor_cap,
                           radius=len)
    elif fam == "antitree":
        s = parse_sequence(prm["s"])

        def size(r):
            v = s(r)
            n = int(round(v))
            if n < 1 or abs(v - n) > 1e-9:
                raise ValueError(f"sphere size s({r}) = {v} must be a positive integer")
            return n

        def nbrs(x):
            r, _ = x
            if r > 0:
                for j in range(size(r - 1)):
                    yield (r - 1, j), 1.0
            for j in range(size(r + 1)):
                yield (r + 1, j), 1.0

        size(0)
        g = GeneratedGraph(f"antitree(s={s.text})", (0, 0), nbrs, params=prm,
                           neighbor_cap=neighbor_cap, radius=lambda x: x[0])
    elif fam == "line":
        b = parse_sequence(prm["b"])
        _positive(b, "b")

        def nbrs(x):
            if x > 0:
                yield x - 1, float(b(x - 1))
            yield x + 1, float(b(x))

        g = GeneratedGraph(f"line(b={b.text})", 0, nbrs, params=prm, neighbor_cap=neighbor_cap,
                           radius=lambda x: x)
    elif fam == "lattice":
        d = int(prm["d"])
        if d < 1:
            raise ValueError("lattice needs d >= 1")

        def nbrs(x):
            for i in range(d):
                for step in (-1, 1):
                    y = list(x)
                    y[i] += step
                    yield tuple(y), 1.0

        g = GeneratedGraph(f"lattice(d={d})", (0,) * d, nbrs, params=prm,
                           neighbor_cap=neighbor_cap, radius=lambda x: sum(abs(t) for t in x))
    elif fam in ("star", "wheel", "starline"):
        w = parse_sequence(prm["w"])
        if not w.summable():
            raise ValueError(f"star weights {w.text!r} are not summable")
        _positive(w, "w")
        # stop listing spokes before their weights underflow; the tail carries the rest
        ks = np.arange(1, neighbor_cap + 1)
        small = np.nonzero(np.asarray(w(ks), dtype=float) < 1e-280)[0]
        neighbor_cap = int(small[0]) if small.size else neighbor_cap
        if fam == "star":
            def nbrs(x):
                if x == 0:
                    return ((k, float(w(k))) for k in count(1))
                return [(0, float(w(x)))]

            g = GeneratedGraph(f"star(w={w.text})", 0, nbrs, tail=lambda x, k: w.tail_sum(k + 1),
                               exhaustion=lambda n: range(n + 1), params=prm,
                               neighbor_cap=neighbor_cap)
        elif fam == "wheel":
            rim = parse_sequence(prm["rim"])
            _positive(rim, "w")

            def nbrs(x):
                if x == 0:
                    return ((k, float(w(k))) for k in count(1))
                out = [(0, float(w(x)))]
                if x > 1:
                    out.append((x - 1, float(rim(x - 1))))
                out.append((x + 1, float(rim(x))))
                return out

            g = GeneratedGraph(f"wheel(w={w.text}, rim={rim.text})", 0, nbrs,
                               tail=lambda x, k: w.tail_sum(k + 1),
                               exhaustion=lambda n: range(n + 1), params=prm,
                               neighbor_cap=neighbor_cap)
        else:
            line = parse_sequence(prm["b"])
            _positive(line, "b")

            def gen_center():
                yield 1, float(line(0))
                for k in count(1):
                    yield -k, float(w(k))

            def nbrs(x):
                if x == 0:
                    return gen_center()
                if x < 0:
                    return [(0, float(w(-x)))]
                return [(x - 1, float(line(x - 1))), (x + 1, float(line(x)))]

            # the first listed neighbour of the centre is the line vertex 1
            g = GeneratedGraph(f"starline(w={w.text}, b={line.text})", 0, nbrs,
                               tail=lambda x, k: w.tail_sum(k),
                               exhaustion=lambda n: range(-n, n + 1), params=prm,
                               neighbor_cap=neighbor_cap)
    else:  # pragma: no cover - guarded by _params
        raise ValueError(fam)
    g.spec = FamilySpec(fam, prm)
    return g


# ---------------------------------------------------------------------------
# radial profiles

@dataclass(frozen=True)
class Tail:
    """Asymptotic class of ``∂B(r) ~ C ratio^r r^degree``."""

    ratio: float = 1.0
    degree: float = 0.0
    exact_geometric: bool = False

    @property
    def type(self) -> str:
        return "geometric" if self.ratio != 1.0 else "polynomial"

    def to_json(self) -> dict:
        if self.type == "geometric":
            return {"type": "geometric", "ratio": self.ratio}
        return {"type": "polynomial", "degree": self.degree}


@dataclass
class RadialProfile:
    """Sphere data of a model graph, tabulated for ``r = 0..R``.

    ``area`` (optional) evaluates ``∂B`` at real ``r`` beyond the table.
    """

    k_plus: np.ndarray
    k_minus: np.ndarray
    sphere_measure: np.ndarray
    tail: Tail | None = None
    area: Callable[[Any], Any] | None = field(default=None, repr=False)
    name: str = "profile"

    def __post_init__(self):
        self.k_plus = np.asarray(self.k_plus, dtype=float)
        self.k_minus = np.asarray(self.k_minus, dtype=float)
        self.sphere_measure = np.asarray(self.sphere_measure, dtype=float)
        if not (len(self.k_plus) == len(self.k_minus) == len(self.sphere_measure)):
            raise ValueError("profile arrays must have equal length")
        if self.k_minus[0] != 0:
            raise ValueError("k_minus(0) must be 0")
        if np.any(~(self.boundary_area > 0)):
            raise ValueError("boundary areas must be positive")

    @property
    def R(self) -> int:
        return len(self.k_plus) - 1

    @property
    def boundary_area(self) -> np.ndarray:
        return self.sphere_measure * self.k_plus

    def areas(self, n: int) -> np.ndarray:
        """``∂B(r)`` for ``r = 0..n``, extended beyond the table via ``area``."""
        if n <= self.R:
            return self.boundary_area[: n + 1]
        if self.area is None:
            raise GraphError(f"profile tabulated only up to R={self.R}")
        ext = np.atleast_1d(self.area(np.arange(self.R + 1, n + 1)))
        return np.concatenate([self.boundary_area, ext])

    def consistency_residual(self) -> float:
        """``max |∂B(r-1)/k_minus(r) - m(S_r)| / m(S_r)`` over ``r >= 1``."""
        ba = self.boundary_area
        r = np.arange(1, self.R + 1)
        km = self.k_minus[r]
        ok = km > 0
        if not ok.any():
            return 0.0
        return float(np.max(np.abs(ba[r - 1][ok] / km[ok] - self.sphere_measure[r][ok])
                            / self.sphere_measure[r][ok]))

    def to_json(self) -> dict:
        out = {"k_plus": self.k_plus.tolist(), "k_minus": self.k_minus.tolist(),
               "m": self.sphere_measure.tolist()}
        if self.tail is not None:
            out["tail"] = self.tail.to_json()
        return out


def _tail_of(form_pairs: Sequence[ClosedForm]) -> Tail | None:
    ratio, degree = 1.0, 0.0
    exact = True
    for f in form_pairs:
        a = f.asymptotic
        if a is None:
            return None
        ratio *= a[0]
        degree += a[1]
        exact &= f.kind == "geom" or (f.kind == "poly" and f.expo == 0)
    return Tail(ratio, degree, exact and ratio != 1.0)


def profile_of(spec: FamilySpec, R: int = 64) -> RadialProfile | None:
    """Exact radial profile for tree, anti-tree and weighted-line families."""
    prm = _params(spec)
    r = np.arange(R + 1)
    if spec.family == "tree":
        d = float(prm["d"])
        kp = np.full(R + 1, d)
        km = np.where(r == 0, 0.0, 1.0)
        ms = d ** r.astype(float)
        tail = Tail(d, 0.0, True) if d != 1 else Tail(1.0, 0.0)
        return RadialProfile(kp, km, ms, tail, area=lambda x: d ** (np.asarray(x, float) + 1),
                             name=f"tree(d={prm['d']})")
    if spec.family == "antitree":
        s = parse_sequence(prm["s"])
        sv = np.asarray(s(np.arange(R + 2)), dtype=float)
        kp = sv[1:]
        km = np.concatenate([[0.0], sv[: R]])
        tail = _tail_of([s, s])
        return RadialProfile(kp, km, sv[: R + 1], tail,
                             area=lambda x: s(np.asarray(x, float)) * s(np.asarray(x, float) + 1),
                             name=f"antitree(s={s.text})")
    if spec.family == "line":
        b = parse_sequence(prm["b"])
        bv = np.asarray(b(np.arange(R + 1)), dtype=float)
        kp = bv
        km = np.concatenate([[0.0], bv[:R]])
        tail = _tail_of([b])
        return RadialProfile(kp, km, np.ones(R + 1), tail, area=lambda x: b(np.asarray(x, float)),
                             name=f"line(b={b.text})")
    return None


def profile_from_json(data: Mapping) -> RadialProfile:
    """Profile from ``{"family": ..., ...}`` or raw ``k_plus/k_minus/m`` arrays."""
    tail = None
    if "tail" in data and data["tail"] is not None:
        t = data["tail"]
        if t["type"] == "geometric":
            tail = Tail(float(t["ratio"]), 0.0)
        elif t["type"] == "polynomial":
            tail = Tail(1.0, float(t["degree"]))
        else:
            raise ValueError(f"unknown tail type {t['type']!r}")
    if "family" in data:
        fam = data["family"]
        params = {k: v for k, v in data.items() if k not in ("family", "tail")}
        if "s" in params and not isinstance(params["s"], str):
            s = [float(v) for v in params["s"]]
            R = len(s) - 2
            if R < 0:
                raise ValueError("need at least two sphere sizes")
            kp = np.array(s[1:])
            km = np.concatenate([[0.0], s[:R]])
            return RadialProfile(kp, km, np.array(s[: R + 1]), tail, name=fam)
        prof = profile_of(FamilySpec(fam, params))
        if prof is None:
            raise ValueError(f"family {fam!r} has no radial profile")
        if tail is not None:
            prof.tail = tail
        return prof
    return RadialProfile(data["k_plus"], data["k_minus"], data["m"], tail, name="raw")


# ---------------------------------------------------------------------------
# radial formulas

def _sp(a: float, p: float) -> float:
    return math.copysign(abs(a) ** (p - 1.0), a) if a else 0.0


def radial_p_laplacian(profile: RadialProfile, f: Sequence[float], r: int, p: float) -> float:
    """``k_plus(r)<f(r) - f(r+1)> + k_minus(r)<f(r) - f(r-1)>``."""
    if not p > 1:
        raise ValueError("p must be > 1")
    if r < 0 or r > profile.R - 1 or r + 1 >= len(f):
        raise IndexError(f"radius {r} outside the tabulated range")
    val = profile.k_plus[r] * _sp(f[r] - f[r + 1], p)
    if r > 0:
        val += profile.k_minus[r] * _sp(f[r] - f[r - 1], p)
    return val


def _terms(profile: RadialProfile, p: float, n: int) -> np.ndarray:
    # areas may overflow to inf far out; their terms are then exactly 0
    with np.errstate(over="ignore"):
        return profile.areas(n) ** (-1.0 / (p - 1.0))


@dataclass
class SeriesResult:
    verdict: str
    label: str
    exact: bool
    partial_sums: list
    note: str = ""

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "label": self.label, "exact": self.exact,
                "partial_sums": self.partial_sums, "note": self.note}


def area_series_test(profile: RadialProfile, p: float, policy: Mapping | None = None) -> SeriesResult:
    """Decide divergence of ``Σ ∂B(r)^{-1/(p-1)}``.

    Exact when the profile has a symbolic tail.  Otherwise the partial sums up
    to the tabulated radius are returned with an inconclusive verdict, unless
    ``policy["assume_divergent_above"]`` names a partial-sum level to trust.
    """
    if not p > 1:
        raise ValueError("p must be > 1")
    n = profile.R
    terms = _terms(profile, p, n)
    partial = np.cumsum(terms)
    marks = sorted({min(n, k) for k in (0, 1, 3, 7, 15, 31, 63, 127, 255, n)})
    sums = [[int(k), float(partial[k])] for k in marks]
    t = profile.tail
    if t is not None:
        if t.ratio > 1:
            verdict = "converges"
            note = f"geometric tail ratio {t.ratio:g} > 1"
        elif t.ratio < 1:
            verdict = "diverges"
            note = f"geometric tail ratio {t.ratio:g} < 1"
        else:
            q = t.degree / (p - 1.0)
            verdict = "diverges" if q <= 1 else "converges"
            note = f"polynomial tail degree {t.degree:g}: degree/(p-1) = {q:g}"
        label = "parabolic" if verdict == "diverges" else "hyperbolic"
        return SeriesResult(verdict, label, True, sums, note)
    policy = dict(policy or {})
    level = policy.get("assume_divergent_above")
    if level is not None and partial[-1] > level:
        return SeriesResult("diverges", "parabolic", False, sums, f"partial sum exceeds {level}")
    return SeriesResult("inconclusive", "inconclusive", False, sums, "no symbolic tail")


@dataclass
class GreenValue:
    value: float
    partial: float
    tail: float
    remainder: float
    exact: bool


def _series_tail(profile: RadialProfile, p: float, start: int) -> tuple[float, float, bool]:
    """``Σ_{k >= start} a_k`` as (estimate, remainder bound, exact)."""
    t = profile.tail
    q = 1.0 / (p - 1.0)
    a_start = float(profile.areas(start)[start]) ** -q
    if t is not None and t.ratio > 1 and _geometric_from(profile, start, t.ratio):
        rho = t.ratio ** -q
        return a_start / (1.0 - rho), 0.0, True
    if profile.area is None:
        return 0.0, math.inf, False
    if t is not None and t.ratio == 1 and t.degree * q <= 1:
        raise ParabolicSignal("series diverges")

    def a(x):
        return float(profile.area(x)) ** -q

    integral, err = integrate.quad(a, start, math.inf, limit=200)
    if not math.isfinite(integral):
        return 0.0, math.inf, False
    # decreasing terms: ∫_start^∞ a <= Σ_{k>=start} a_k <= a_start + ∫_start^∞ a
    return integral + a_start / 2.0, a_start / 2.0 + err, False


def _geometric_from(profile: RadialProfile, start: int, ratio: float) -> bool:
    ba = profile.areas(max(start + 8, profile.R))
    r = ba[start + 1:] / ba[start:-1]
    return bool(np.all(np.abs(r - ratio) <= 1e-12 * ratio))


def radial_green(profile: RadialProfile, p: float, r: int, truncation: int | None = None) -> GreenValue:
    """``g(r) = Σ_{k >= r} ∂B(k)^{-1/(p-1)}``: partial sum to the truncation plus the tail."""
    verdict = area_series_test(profile, p)
    if verdict.verdict == "diverges":
        raise ParabolicSignal(f"Σ ∂B^(-1/(p-1)) diverges ({verdict.note}); no Green's function")
    R = profile.R if truncation is None else int(truncation)
    if r > R:
        R = r
    terms = _terms(profile, p, R)
    partial = math.fsum(terms[r: R + 1])
    tail, rem, exact = _series_tail(profile, p, R + 1)
    return GreenValue(partial + tail, partial, tail, rem, exact)


def radial_green_values(profile: RadialProfile, p: float, rmax: int) -> np.ndarray:
    """``g(0..rmax)`` via one tail evaluation and backward accumulation."""
    R = max(profile.R, rmax)
    g_end = radial_green(profile, p, R).value
    terms = _terms(profile, p, R)
    out = np.empty(R + 1)
    out[R] = g_end
    for k in range(R - 1, -1, -1):
        out[k] = out[k + 1] + terms[k]
    return out[: rmax + 1]


def curvature_ratio_green(profile: RadialProfile, p: float, r: int, r0: int = 0) -> float:
    """Closed form ``[(κ^{1/(p-1)} - 1) ∂B(r-1)^{1/(p-1)}]^{-1}`` for constant ratio ``κ = k_+/k_-``."""
    if r <= r0 or r < 1:
        raise ValueError("need r > r0 and r >= 1")
    rr = np.arange(max(r0 + 1, 1), profile.R + 1)
    kappa = profile.k_plus[rr] / profile.k_minus[rr]
    k0 = float(kappa[0])
    if not np.all(np.abs(kappa - k0) <= 1e-12 * abs(k0)):
        raise ValueError("curvature ratio is not constant beyond r0")
    if not k0 > 1:
        raise ValueError(f"curvature ratio {k0} must be > 1")
    q = 1.0 / (p - 1.0)
    return 1.0 / ((k0 ** q - 1.0) * float(profile.areas(r - 1)[r - 1]) ** q)


@dataclass
class RadialNullSequence:
    values: np.ndarray
    energy: float
    c_n: float


def radial_null_sequence(profile: RadialProfile, p: float, n: int) -> RadialNullSequence:
    """Radial capacity minimiser of the root in ``B_n``: ``e(0)=1``, ``e=0`` from ``n+1`` on."""
    if not p > 1:
        raise ValueError("p must be > 1")
    terms = _terms(profile, p, n)
    c_n = 1.0 / math.fsum(terms)
    steps = c_n * terms
    vals = np.empty(n + 2)
    vals[0] = 1.0
    acc = [1.0]
    for k in range(n + 1):
        acc.append(-steps[k])
        vals[k + 1] = math.fsum(acc)
    vals[n + 1] = 0.0
    vals = np.maximum(vals, 0.0)
    return RadialNullSequence(vals, c_n ** (p - 1.0), c_n)


def radial_capacity(profile: RadialProfile, p: float, n: int) -> float:
    """``cap(root, B_n) = c_n^{p-1}``."""
    return (1.0 / math.fsum(_terms(profile, p, n))) ** (p - 1.0)


def lift_radial(graph: GeneratedGraph, target: WeightedGraph, values: Sequence[float],
                default: float = 0.0) -> VertexFunction:
    """Radial function on the vertices of a truncation (``values`` beyond its length -> default)."""
    if graph.radius is None:
        raise ValueError(f"{graph.name} has no radius function")
    vals = list(values)
    data = {}
    for v in target.vertices:
        r = graph.radius(v)
        data[v] = float(vals[r]) if r < len(vals) else default
    return VertexFunction(data, default)


# ---------------------------------------------------------------------------
# bespoke certificates for non-model families

@dataclass
class Certificate:
    kind: str
    label: str | None
    exact: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "label": self.label, "exact": self.exact,
                "details": _jsonable(self.details)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _line_series(seq: ClosedForm, p: float) -> SeriesResult:
    a = seq.asymptotic
    tail = None if a is None else Tail(a[0], a[1])
    R = 64
    vals = np.asarray(seq(np.arange(R + 1)), dtype=float)
    prof = RadialProfile(vals, np.concatenate([[0.0], vals[:R]]), np.ones(R + 1), tail,
                         area=lambda x: seq(np.asarray(x, float)))
    return area_series_test(prof, p)


def _line_null_energy(seq: ClosedForm, p: float, n: int, offset: int = 0):
    """Radial null sequence of the weighted line ``b(k) = seq(k + offset)`` on ``0..n+1``."""
    b = np.asarray(seq(np.arange(offset, offset + n + 1)), dtype=float)
    terms = b ** (-1.0 / (p - 1.0))
    c_n = 1.0 / math.fsum(terms)
    ell = np.concatenate([[1.0], 1.0 - np.cumsum(c_n * terms)])
    ell[-1] = 0.0
    return np.maximum(ell, 0.0), c_n ** (p - 1.0)


def family_certificate(graph: GeneratedGraph, p: float, stages: int = 64) -> Certificate | None:
    """Closed-form classification for star, wheel and star-line graphs."""
    spec = getattr(graph, "spec", None)
    if spec is None or spec.family not in ("star", "wheel", "starline"):
        return None
    prm = spec.params
    w = parse_sequence(prm["w"])
    ns = [n for n in (1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024) if n <= max(stages, 1)]
    if spec.family == "star":
        energies = [[n, w.tail_sum(n + 1)] for n in ns]
        return Certificate("star-null-sequence", "parabolic", True,
                           {"construction": "e_n = 1 on {0..n}, 0 elsewhere; energy = spoke weight beyond n",
                            "energies": energies})
    seq = parse_sequence(prm["rim"] if spec.family == "wheel" else prm["b"])
    offset = 1 if spec.family == "wheel" else 0
    shifted = seq if offset == 0 else _shift(seq, offset)
    series = _line_series(shifted, p)
    if series.verdict == "converges":
        q = 1.0 / (p - 1.0)
        prof_tail = shifted.asymptotic
        total = _line_green_sum(shifted, p)
        lower = total ** -(p - 1.0)
        part = "rim" if spec.family == "wheel" else "line"
        return Certificate(f"{spec.family}-subgraph", "hyperbolic", True,
                           {"argument": f"the {part} subgraph is hyperbolic and adding edges cannot lower capacity",
                            "series": series.to_json(), "capacity_lower_bound": lower,
                            "tail": prof_tail, "exponent": q})
    if series.verdict == "diverges":
        energies = []
        for n in ns:
            ell, line_energy = _line_null_energy(shifted, p, n)
            if spec.family == "wheel":
                # rim vertex k carries ell[k - 1]; beyond n + 2 the function vanishes
                k = np.arange(1, n + 3)
                spokes = np.asarray(w(k), dtype=float)
                energy = math.fsum(spokes * np.abs(1.0 - ell) ** p) + w.tail_sum(n + 3) + line_energy
            else:
                energy = w.tail_sum(n + 1) + line_energy
            energies.append([n, energy])
        return Certificate(f"{spec.family}-null-sequence", "parabolic", True,
                           {"series": series.to_json(), "energies": energies})
    return Certificate(f"{spec.family}-series", None, False, {"series": series.to_json()})


def _shift(seq: ClosedForm, offset: int) -> ClosedForm:
    if seq.kind == "poly":
        return ClosedForm(seq.text, "poly", seq.coef, seq.shift + offset, seq.expo)
    if seq.kind == "geom":
        return ClosedForm(seq.text, "geom", seq.coef, seq.shift + offset, 0.0, seq.base)
    return ClosedForm(seq.text, "table", table=seq.table[offset:])


def _line_green_sum(seq: ClosedForm, p: float) -> float:
    q = 1.0 / (p - 1.0)
    if seq.kind == "geom":
        return seq.coef ** -q * seq.base ** (-q * seq.shift) / (1.0 - seq.base ** -q)
    if seq.kind == "poly" and seq.expo * q > 1:
        return seq.coef ** -q * float(special.zeta(seq.expo * q, seq.shift))
    raise InconclusiveError("no closed-form sum")


def expected_label(spec: FamilySpec, p: float) -> str | None:
    """Known classification of the family (lattice: parabolic iff d <= p)."""
    if spec.family == "lattice":
        return "parabolic" if int(spec.params.get("d", 2)) <= p else "hyperbolic"
    return None
