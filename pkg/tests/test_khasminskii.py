import numpy as np
import pytest

from conftest import path_graph
from pgraph import (
    DirichletProblem,
    FamilySpec,
    NotParabolicError,
    VertexFunction,
    ahlfors_check,
    exhaustion_function,
    generate,
    khasminskii_potential,
    laplacian_values,
    solve_dirichlet,
    superharmonic_report,
    weak_max_check,
)

TOL = 1e-10
LINE = FamilySpec("line", {})
TREE = FamilySpec("tree", {"d": 2})


def _tree_green_profile(depth):
    """``u = 1 - g/g(0)`` with ``g = 2^{-r}`` on a truncated binary tree."""
    T = generate(TREE).truncate_ball(depth)
    return T, VertexFunction({v: 1.0 - 2.0 ** -len(v) for v in T.vertices}, 1.0)


def test_weak_max_on_line_is_positive():
    T = generate(LINE).truncate_ball(20)
    u = VertexFunction({j: 1.0 - 2.0 ** -j for j in T.vertices}, 1.0)
    res = weak_max_check(T, u, 0.9, 2.0)
    # Δ u(j) = 2^{-j-1}, largest at the first vertex above 0.9
    assert res.sup == pytest.approx(2.0 ** -5, rel=1e-12)
    assert res.witness == 4
    assert not res.violation


def test_weak_max_fails_on_tree():
    T, u = _tree_green_profile(6)
    res = weak_max_check(T, u, 0.5, 2.0)
    assert res.sup <= 1e-12
    assert res.escapes  # the superlevel set reaches the frontier


def test_weak_max_rejects_constants(path5):
    with pytest.raises(ValueError):
        weak_max_check(path5, VertexFunction({}, 1.0), 0.0, 2.0)


def test_ahlfors_counterexample_on_tree():
    T, u = _tree_green_profile(8)
    V = [v for v in T.vertices if v != ()]
    res = ahlfors_check(T, u, V, 2.0)
    assert res.sup_boundary == 0.0
    assert res.sup_closure >= 0.5
    assert res.subharmonic and res.max_laplacian <= 1e-8
    assert not res.equality


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_ahlfors_equality_for_dirichlet_solutions(p):
    G = path_graph(8)
    rep = solve_dirichlet(DirichletProblem(G, range(1, 8), {0: 0.3, 8: 0.9}, p))
    res = ahlfors_check(G, rep.solution, range(1, 8), p)
    assert res.equality and res.subharmonic


def test_ahlfors_constant_is_equality(path5):
    assert ahlfors_check(path5, VertexFunction({}, 2.0), [1, 2], 2.0).equality


def test_exhaustion_function_on_line():
    ex = exhaustion_function(generate(LINE), [0], 2.0, 30, construction="sum", ratio=3)
    assert ex.f(0) == 0.0
    vals = [ex.f(r) for r in range(32)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
    assert ex.f(31) == ex.level == len(ex.terms)
    assert ex.energy <= ex.minkowski_bound * (1 + 1e-12)


def test_scaled_exhaustion_is_distance_on_line():
    ex = exhaustion_function(generate(LINE), [0], 2.0, 20, construction="scaled")
    np.testing.assert_allclose([ex.f(r) for r in range(22)], np.minimum(np.arange(22), 21), atol=1e-9)


def test_exhaustion_refused_on_hyperbolic_tree():
    with pytest.raises(NotParabolicError):
        exhaustion_function(generate(TREE), None, 2.0, 5)


def _check_run(run, p):
    T = run.graph
    assert run.complete
    assert run.kappa(0) == 0.0
    inner = [v for v in T.vertices if v not in run.K and T.index[v] not in T.frontier]
    assert superharmonic_report(T, run.kappa, inner, p, 1e-8).superharmonic
    dist = {v: v for v in T.vertices}
    for n, snap in enumerate(run.snapshots[1:], start=1):
        S_radius = run.stages[n - 1].radius
        outside = [snap(v) for v, d in dist.items() if d > S_radius]
        assert min(outside) >= n - 10 * TOL
    for n, st in enumerate(run.stages):
        assert st.gradient_increment < 2.0 ** -n
        assert st.sup_change < 2.0 ** (-n - 1)
    assert run.monotone_h and run.h_bounded
    for a, b in zip(run.snapshots, run.snapshots[1:]):
        assert all(a(v) <= b(v) + 10 * TOL for v in T.vertices)


@pytest.mark.parametrize("p, stages, truncation", [(1.5, 3, 700), (2.0, 4, 400), (3.0, 4, 400)])
def test_khasminskii_on_line(p, stages, truncation):
    # the gradient bound forces j to grow like 2^{np/(p-1)}, so small p needs a longer line
    run = khasminskii_potential(generate(LINE), [0], p, stages, truncation)
    _check_run(run, p)


def test_khasminskii_reports_short_truncation():
    run = khasminskii_potential(generate(LINE), [0], 2.0, 3, 60)
    assert not run.complete
    assert "stage 2" in run.diagnostic
    assert len(run.stages) == 3 and run.stages[-1].j == -1


def test_khasminskii_refused_on_tree():
    with pytest.raises(NotParabolicError):
        khasminskii_potential(generate(TREE), None, 2.0, 2, 20)


def test_constructed_potential_never_violates_weak_max():
    run = khasminskii_potential(generate(LINE), [0], 2.0, 4, 400)
    T = run.graph
    kappa = np.array([run.kappa(v) for v in T.vertices])
    for gamma in (-3.5, -2.5, -1.5, -0.5):
        u = VertexFunction.from_array(T, -kappa, default=-run.kappa.default)
        assert not weak_max_check(T, u, gamma, 2.0).violation
    lap = laplacian_values(T, run.kappa, 2.0)
    assert np.nanmin(lap[1:]) >= -1e-8
