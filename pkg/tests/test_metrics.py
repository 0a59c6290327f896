import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import P_IDENTITY, graphs, path_graph
from oracles import binary_tree_capacity
from pgraph import (
    EdgeFlow,
    EdgeWeighting,
    FamilySpec,
    GraphError,
    VertexFunction,
    ball_finiteness,
    distances_from,
    divergence,
    divergence_values,
    flow_greens_residual,
    generate,
    gradient_flow,
    injectivize,
    intrinsic_check,
    intrinsic_from_function,
    knr_certificate,
    laplacian_values,
    metric_null_sequence,
    p_energy,
    path_metric,
)


def _floyd_warshall(G, w):
    D = np.full((G.n, G.n), np.inf)
    np.fill_diagonal(D, 0.0)
    for (i, j), v in zip(G.edges, w.values):
        D[i, j] = D[j, i] = min(D[i, j], v)
    for k in range(G.n):
        D = np.minimum(D, D[:, [k]] + D[[k], :])
    return D


@given(graphs(min_n=2), st.integers(0, 2 ** 31))
def test_path_metric_is_a_metric(G, seed):
    rng = np.random.default_rng(seed)
    w = EdgeWeighting(G, rng.uniform(0.05, 3.0, len(G.edges)))
    D = np.array([distances_from(w, [x]) for x in G.vertices])
    np.testing.assert_allclose(D, _floyd_warshall(G, w), rtol=1e-12)
    np.testing.assert_allclose(D, D.T)
    # triangle inequality d(x, z) <= d(x, y) + d(y, z)
    assert np.all(D[:, None, :] <= D[:, :, None] + D[None, :, :] + 1e-12)
    # distinct points are separated by at least the smallest incident weight
    for k, x in enumerate(G.vertices):
        js, _ = G.neighbor_indices(k)
        low = min(w(x, G.vertices[j]) for j in js)
        others = np.delete(D[k], k)
        assert np.all(others >= low - 1e-15)


def test_path_metric_certification_on_truncation():
    T = generate(FamilySpec("line", {})).truncate_ball(5)
    w = EdgeWeighting.from_function(T, 1.0)
    d = path_metric(T, w, 0, 3)
    assert d.value == 3.0 and d.certified
    assert ball_finiteness(T, w, 0, 4.5)
    assert not ball_finiteness(T, w, 0, 7.0)


def test_zero_weights_are_not_a_metric(path5):
    with pytest.raises(ValueError):
        distances_from(EdgeWeighting.from_function(path5, 0.0), [0])


def test_combinatorial_weight_is_intrinsic_for_degree_measure():
    G = path_graph(4, b=[1.0, 2.0, 0.5, 1.0])
    w = EdgeWeighting.from_function(G, 1.0)
    rep = intrinsic_check(G, w, VertexFunction.from_array(G, G.deg), 2.0)
    assert rep.intrinsic and max(abs(s) for s in rep.slack.values()) < 1e-15
    rep = intrinsic_check(G, EdgeWeighting.from_function(G, 1.5), VertexFunction.from_array(G, G.deg), 2.0)
    assert not rep.intrinsic


@given(graphs(min_n=2), st.sampled_from(P_IDENTITY), st.integers(0, 2 ** 31))
def test_function_weight_is_intrinsic_with_zero_slack(G, p, seed):
    u = np.random.default_rng(seed).uniform(-1, 1, G.n)
    sigma, mf = intrinsic_from_function(G, VertexFunction.from_array(G, u), p)
    rep = intrinsic_check(G, sigma, mf, p)
    assert rep.intrinsic
    total = sum(mf(v) for v in G.vertices)
    assert total == pytest.approx(2 * p_energy(G, VertexFunction.from_array(G, u), p), rel=1e-12)


@given(graphs(min_n=3), st.sampled_from(P_IDENTITY), st.floats(1e-6, 0.5), st.integers(0, 2 ** 31))
def test_injectivize_separates_values_within_budget(G, p, eps, seed):
    rng = np.random.default_rng(seed)
    u = rng.integers(0, 3, G.n).astype(float)
    f = VertexFunction.from_array(G, u)
    g = injectivize(G, f, eps, p)
    new = np.array([g(v) for v in G.vertices])
    assert len(np.unique(new)) == G.n
    assert np.max(np.abs(new - u)) < eps
    assert p_energy(G, VertexFunction.from_array(G, new - u), p) < eps
    assert injectivize(G, f, eps, p).support == g.support


def test_intrinsic_from_function_needs_injective_input(path5):
    with pytest.raises(GraphError):
        intrinsic_from_function(path5, VertexFunction({0: 1.0, 1: 1.0}), 2.0)


def test_metric_null_sequence_on_line():
    T = generate(FamilySpec("line", {})).truncate_ball(30)
    sigma = EdgeWeighting.from_function(T, 0.1)
    stages = metric_null_sequence(T, sigma, [[0], range(3)], 2.0, VertexFunction.from_array(T, T.deg))
    # e = 1 - d/10 decays over ten unit edges of slope 0.1
    assert stages[0].energy == pytest.approx(10 * 0.01, rel=1e-12)
    assert not stages[0].escapes
    assert stages[0].e(0) == 1.0 and stages[0].e(10) == pytest.approx(0.0, abs=1e-12)
    assert stages[0].e(11) == 0.0


@given(graphs(min_n=2), st.sampled_from(P_IDENTITY), st.integers(0, 2 ** 31))
def test_flow_greens_formula(G, p, seed):
    rng = np.random.default_rng(seed)
    F = EdgeFlow(G, rng.uniform(-2, 2, len(G.edges)))
    phi = VertexFunction.from_array(G, rng.uniform(-1, 1, G.n))
    assert abs(flow_greens_residual(G, F, phi)) < 1e-10
    # constant test function: the total divergence vanishes
    assert abs(np.sum(divergence_values(F) * G.m)) < 1e-10


@given(graphs(min_n=2, potential=False), st.sampled_from(P_IDENTITY), st.integers(0, 2 ** 31))
def test_gradient_flow_divergence_is_laplacian(G, p, seed):
    u = VertexFunction.from_array(G, np.random.default_rng(seed).uniform(-1, 1, G.n))
    F = gradient_flow(G, u, p)
    np.testing.assert_allclose(divergence_values(F), laplacian_values(G, u, p), atol=1e-12)
    x = G.vertices[-1]
    assert divergence(G, F, x) == pytest.approx(divergence_values(F)[G.index[x]], abs=1e-12)
    y = G.vertices[G.neighbor_indices(G.n - 1)[0][0]]
    assert F(x, y) == -F(y, x)


def test_knr_certificate_on_binary_tree():
    cert = knr_certificate(generate(FamilySpec("tree", {"d": 2})), None, 2.0, 3)
    assert cert.o_mass == pytest.approx(16 / 15, abs=1e-9)
    assert cert.o_mass == pytest.approx(binary_tree_capacity(3), rel=1e-9)
    assert abs(cert.total) <= 1e-12
