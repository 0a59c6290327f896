import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import P_IDENTITY, graphs, path_graph
from pgraph import (
    Exhaustion,
    FamilySpec,
    GraphError,
    GraphValidationError,
    PGraphParseError,
    VertexFunction,
    WeightedGraph,
    dump_graph,
    ends,
    generate,
    greens_formula_residual,
    laplacian_values,
    load_graph,
    p_energy,
    p_laplacian,
    region,
    schroedinger,
    signed_power,
)


def test_signed_power_is_odd():
    a = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    out = signed_power(a, 3.0)
    np.testing.assert_allclose(out, [-4.0, -0.25, 0.0, 0.25, 4.0])
    assert signed_power(-3.0, 2.0) == -3.0


def test_p_laplacian_by_hand():
    G = WeightedGraph.build([(0, 1, 2.0), (1, 2, 1.0)], m={0: 1, 1: 4, 2: 1})
    f = VertexFunction({0: 0.0, 1: 1.0, 2: 3.0})
    # (2 <1 - 0>^2 + 1 <1 - 3>^2) / 4 = (2 - 4) / 4
    assert p_laplacian(G, f, 1, 3.0) == pytest.approx(-0.5)
    assert p_laplacian(G, f, 1, 2.0) == pytest.approx((2.0 - 2.0) / 4)


def test_schroedinger_adds_potential():
    G = WeightedGraph.build([(0, 1, 1.0)], m={0: 2, 1: 1}, c={0: 3.0})
    f = VertexFunction({0: -2.0, 1: 0.0})
    # (<-2> + 3 <-2>) / 2 with <a> = |a| a at p = 3
    assert schroedinger(G, f, 0, 3.0) == pytest.approx((-4.0 + 3 * -4.0) / 2)


def test_energy_counts_each_edge_once():
    G = path_graph(3)
    f = VertexFunction({0: 0.0, 1: 1.0, 2: 3.0, 3: 3.0})
    assert p_energy(G, f, 2.0) == pytest.approx(1 + 4)
    assert p_energy(G, f, 2.0, region=[0, 1]) == pytest.approx(1)


def test_roundtrip_text_format():
    text = "# demo\nV a 1.5 0\nV b 2 0.25\nV c 1 0\nE a b 3\nE b c 0.5\n"
    G = load_graph(text)
    H = load_graph(dump_graph(G))
    assert H.vertices == G.vertices
    np.testing.assert_array_equal(H.weights, G.weights)
    np.testing.assert_array_equal(H.m, G.m)
    np.testing.assert_array_equal(H.c, G.c)


@pytest.mark.parametrize("text, line", [
    ("V a 1 0\nX a b 1\n", 2),
    ("V a 1 0\nV b one 0\n", 2),
    ("V a 1\n", 1),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(PGraphParseError) as err:
        load_graph(text)
    assert err.value.line == line


@pytest.mark.parametrize("edges, invariant", [
    ([(0, 0, 1.0)], "self-loop"),
    ([(0, 1, 1.0), (1, 0, 2.0)], "duplicate edge"),
    ([(0, 1, -1.0)], "non-positive weight"),
    ([(0, 1, 1.0), (2, 3, 1.0)], "disconnected"),
])
def test_validation(edges, invariant):
    with pytest.raises(GraphValidationError) as err:
        WeightedGraph.build(edges)
    assert err.value.invariant == invariant


def test_region_boundaries_on_path():
    R = region(path_graph(5), [1, 2, 3])
    assert R.exterior_boundary == (0, 4)
    assert R.interior_boundary == (1, 3)
    assert R.closure == (0, 1, 2, 3, 4)


def test_tree_ends_escape():
    comps = ends(generate(FamilySpec("tree", {"d": 2})), [()], 3)
    assert len(comps) == 2
    assert all(c.escapes for c in comps)


def test_star_reports_tail_end():
    comps = ends(generate(FamilySpec("star", {})), [0], 1)
    assert any(c.kind == "tail" for c in comps)


def test_generated_balls_refuse_infinite_neighbourhoods():
    with pytest.raises(GraphError):
        generate(FamilySpec("star", {})).ball(1)


def test_truncation_keeps_ball_and_marks_frontier():
    G = generate(FamilySpec("lattice", {"d": 2}))
    T = G.truncate_ball(2)
    assert T.meta["inner"] == 13
    # the distance-3 sphere is materialised but not complete
    assert len(T.frontier) == 12
    assert np.isnan(laplacian_values(T, VertexFunction({}, 0.0), 2.0)[list(T.frontier)]).all()


def test_exhaustion_is_increasing():
    X = Exhaustion(generate(FamilySpec("tree", {})))
    stages = [set(X.stage(n)) for n in range(5)]
    assert all(a < b for a, b in zip(stages, stages[1:]))


@given(graphs(), st.sampled_from(P_IDENTITY), st.integers(0, 2 ** 31))
def test_greens_formula(G, p, seed):
    rng = np.random.default_rng(seed)
    f = VertexFunction.from_array(G, rng.uniform(-2, 2, G.n))
    V = [v for v in G.vertices if rng.random() < 0.6] or [G.vertices[0]]
    phi = VertexFunction({v: float(rng.uniform(-1, 1)) for v in V})
    assert abs(greens_formula_residual(G, f, phi, V, p)) < 1e-10


@given(graphs(potential=True), st.sampled_from(P_IDENTITY), st.floats(-3, 3), st.integers(0, 2 ** 31))
def test_homogeneity(G, p, lam, seed):
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1, 1, G.n)
    f = VertexFunction.from_array(G, u)
    g = VertexFunction.from_array(G, lam * u)
    np.testing.assert_allclose(laplacian_values(G, g, p),
                               signed_power(lam, p) * laplacian_values(G, f, p), atol=1e-10)
    assert p_energy(G, g, p) == pytest.approx(abs(lam) ** p * p_energy(G, f, p), rel=1e-10, abs=1e-12)


@given(graphs(potential=True), st.sampled_from(P_IDENTITY), st.integers(0, 2 ** 31))
def test_normal_contraction_lowers_energy(G, p, seed):
    u = np.random.default_rng(seed).uniform(-1.5, 2.5, G.n)
    f = VertexFunction.from_array(G, u)
    cf = VertexFunction.from_array(G, np.clip(u, 0.0, 1.0))
    assert p_energy(G, cf, p) <= p_energy(G, f, p) + 1e-12


def test_energy_refuses_undetermined_frontier():
    T = generate(FamilySpec("line", {})).truncate_ball(2)
    with pytest.raises(GraphError):
        p_energy(T, VertexFunction({3: 1.0}, 0.0), 2.0)
    assert math.isfinite(p_energy(T, VertexFunction({0: 1.0}, 0.0), 2.0))
