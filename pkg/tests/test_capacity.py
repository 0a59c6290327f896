import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import P_SOLVER, graphs
from oracles import binary_tree_capacity, line_capacity
from pgraph import (
    FamilySpec,
    GraphError,
    NoHardyWeight,
    ParabolicSignal,
    capacity,
    capacity_limit,
    classify,
    extrapolate,
    generate,
    greens_function,
    hardy_gap,
    hardy_weight,
    liouville_probe,
    null_sequence,
    poincare_constant,
    region,
    VertexFunction,
    WeightedGraph,
)

TOL = 1e-10


def test_path_capacity_is_series_resistance(path5):
    assert capacity(path5, [0], range(5), 2.0).value == pytest.approx(0.2, abs=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_line_capacity_closed_form(p):
    seq = capacity_limit(generate(FamilySpec("line", {})), None, p, 10)
    np.testing.assert_allclose(seq.caps, [line_capacity(n, p) for n in range(11)], rtol=1e-8)
    assert seq.monotone_cap and seq.monotone_u


def test_binary_tree_capacity_closed_form():
    seq = capacity_limit(generate(FamilySpec("tree", {"d": 2})), None, 2.0, 8)
    np.testing.assert_allclose(seq.caps, [binary_tree_capacity(n) for n in range(9)], rtol=1e-8)


def test_capacity_needs_k_inside_v(path5):
    with pytest.raises(GraphError):
        capacity(path5, [0, 5], range(4), 2.0)


def _pair(G, rng):
    V = [v for v in G.vertices if rng.random() < 0.7]
    if len(V) == G.n:
        V = V[:-1]
    V = V or [G.vertices[0]]
    K = [v for v in V if rng.random() < 0.4] or [V[0]]
    return K, V


@given(graphs(min_n=3), st.sampled_from(P_SOLVER), st.integers(0, 2 ** 31))
def test_capacity_monotone_in_v_and_k(G, p, seed):
    rng = np.random.default_rng(seed)
    K, V = _pair(G, rng)
    V2 = sorted(set(V) | {v for v in G.vertices if rng.random() < 0.5} - {G.vertices[-1]} | set(V))
    K2 = sorted(set(K) | {v for v in V if rng.random() < 0.3})
    c = capacity(G, K, V, p, TOL).value
    assert c >= capacity(G, K, V2, p, TOL).value - 10 * TOL
    assert c <= capacity(G, K2, V, p, TOL).value + 10 * TOL


@given(graphs(min_n=3), st.sampled_from(P_SOLVER), st.integers(0, 2 ** 31))
def test_capacity_subadditive(G, p, seed):
    rng = np.random.default_rng(seed)
    K1, V = _pair(G, rng)
    K2 = [v for v in V if rng.random() < 0.4] or [V[-1]]
    union = sorted(set(K1) | set(K2))
    lhs = capacity(G, union, V, p, TOL).value
    assert lhs <= capacity(G, K1, V, p, TOL).value + capacity(G, K2, V, p, TOL).value + 10 * TOL


@given(graphs(min_n=4), st.sampled_from(P_SOLVER), st.integers(0, 2 ** 31))
def test_capacity_is_determined_on_the_boundary(G, p, seed):
    rng = np.random.default_rng(seed)
    K = [v for v in G.vertices if rng.random() < 0.3] or [G.vertices[0]]
    dK = list(region(G, K).exterior_boundary)
    closure = set(K) | set(dK)
    rest = [v for v in G.vertices if v not in closure]
    if not dK or not rest:
        return
    V = sorted(closure | {v for v in rest[:-1] if rng.random() < 0.5})
    a = capacity(G, sorted(closure), V, p, TOL).value
    b = capacity(G, dK, V, p, TOL).value
    assert abs(a - b) <= 10 * TOL


@pytest.mark.parametrize("family, params, p, label", [
    ("star", {}, 1.5, "parabolic"),
    ("star", {}, 3.0, "parabolic"),
    ("tree", {"d": 2}, 1.5, "hyperbolic"),
    ("tree", {"d": 2}, 3.0, "hyperbolic"),
    ("antitree", {"s": "r+1"}, 2.0, "hyperbolic"),
    ("antitree", {"s": "r+1"}, 3.0, "parabolic"),
    ("line", {"b": "(n+1)^2"}, 2.0, "hyperbolic"),
    ("line", {}, 2.5, "parabolic"),
    ("wheel", {}, 2.0, "parabolic"),
    ("starline", {"b": "2^n"}, 2.0, "hyperbolic"),
])
def test_classification(family, params, p, label):
    v = classify(generate(FamilySpec(family, params)), None, p)
    assert v.label == label
    assert v.evidence and v.evidence[0].exact


def test_finite_graph_is_parabolic_and_potential_is_hyperbolic(path5):
    assert classify(path5, None, 2.0).label == "parabolic"
    G = WeightedGraph.build([(0, 1, 1.0)], c={1: 0.5})
    assert classify(G, None, 2.0).label == "hyperbolic"


def test_lattice_capacity_trend_and_expected_label():
    v = classify(generate(FamilySpec("lattice", {"d": 2})), None, 2.0)
    assert v.expected == "parabolic"
    assert v.evidence[0].details["strictly_decreasing"]


def test_green_normalisation_on_tree():
    est = greens_function(generate(FamilySpec("tree", {"d": 2})), None, 2.0, 10)
    assert est.root_residual < 1e-8
    assert est.harmonic_residual < 1e-8
    assert est.cc_from_g == pytest.approx(est.cap_N, rel=1e-10)


def test_green_refused_on_parabolic_line():
    with pytest.raises(ParabolicSignal):
        greens_function(generate(FamilySpec("line", {})), None, 2.0, 6)


def test_null_sequence_energies_and_scaling():
    ns = null_sequence(generate(FamilySpec("line", {})), None, 2.0, 20)
    np.testing.assert_allclose(ns.energies, [line_capacity(n) for n in range(21)], rtol=1e-8)
    assert all(f(0) == 1.0 for f in ns.functions)
    np.testing.assert_allclose(ns.scaled_energies(0.5, 2.0), 4 * np.array(ns.energies))


def test_extrapolation_of_harmonic_decay():
    ex = extrapolate(list(range(20)), [1.0 / (n + 1) for n in range(20)])
    assert abs(ex.limit) < 1e-6


def test_hardy_inequality_on_tree():
    G = generate(FamilySpec("tree", {"d": 2}))
    V = G.stage(4)
    mu = hardy_weight(G, 2.0, [(), (0,)], [0.5, 0.5], V)
    T = G.truncate(V)
    rng = np.random.default_rng(3)
    for _ in range(20):
        phi = VertexFunction({v: float(rng.uniform(-1, 1)) for v in V}, 0.0)
        assert hardy_gap(T, mu, phi, 2.0) >= -1e-12
    with pytest.raises(ValueError):
        hardy_weight(G, 2.0, [()], [0.7], V)


def test_no_hardy_weight_on_parabolic_line():
    G = generate(FamilySpec("line", {}))
    with pytest.raises(NoHardyWeight):
        hardy_weight(G, 2.0, [0], [1.0], G.stage(3))


def test_poincare_constant_on_tree():
    G = generate(FamilySpec("tree", {"d": 2}))
    V = G.stage(4)
    C = poincare_constant(G, [()], 2.0, V)
    assert C == pytest.approx(1.0 / binary_tree_capacity(4), rel=1e-8)


def test_liouville_oscillation_shrinks_on_line():
    probe = liouville_probe(generate(FamilySpec("line", {})), 2.0, [4, 8, 16])
    osc = [o for _, o in probe]
    assert osc[0] > osc[1] > osc[2]
    assert math.isclose(osc[2], 2 / 17, rel_tol=1e-6)
