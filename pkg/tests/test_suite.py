import json

import pytest

from conftest import path_graph
from pgraph import FamilySpec, SuiteConfig, SuiteContradiction, generate, run_suite

DEFINITIVE = {"parabolic", "hyperbolic"}


def _definitive(rep):
    return {k: v for k, v in rep.labels().items() if v in DEFINITIVE}


def test_tree_suite_is_hyperbolic_everywhere():
    rep = run_suite(generate(FamilySpec("tree", {"d": 2})), 2.0, SuiteConfig())
    labels = _definitive(rep)
    assert set(labels.values()) == {"hyperbolic"}
    assert {"classify", "area_series", "capacity_decay", "null_sequence", "green", "hardy"} <= set(labels)
    assert rep.sections["green"]["normalisation_ok"]
    assert rep.sections["hardy"]["valid"]
    assert rep.consistent


def test_line_suite_is_parabolic():
    rep = run_suite(generate(FamilySpec("line", {})), 2.5, SuiteConfig(stages=10))
    labels = _definitive(rep)
    assert set(labels.values()) == {"parabolic"}
    assert {"classify", "area_series", "null_sequence", "green", "hardy", "khasminskii"} <= set(labels)
    energies = [e for _, e in rep.sections["null_sequence"]["energies"]]
    assert rep.sections["null_sequence"]["decreasing"] and energies[-1] < energies[0] / 10
    assert rep.sections["liouville"]["decreasing"]


def test_lattice_suite_reports_trend_and_expected_label():
    rep = run_suite(generate(FamilySpec("lattice", {"d": 2})), 2.0, SuiteConfig(stages=8))
    assert rep.expected == "parabolic"
    assert rep.verdict.label == "inconclusive"
    assert rep.sections["capacity_decay"]["strictly_decreasing"]
    assert rep.consistent


def test_finite_graph_suite():
    rep = run_suite(path_graph(6), 2.0, SuiteConfig(stages=3))
    assert rep.verdict.label == "parabolic" and rep.consistent


def test_report_is_json_serialisable_and_deterministic():
    G = generate(FamilySpec("antitree", {"s": "r+1"}))
    a = json.dumps(run_suite(G, 3.0, SuiteConfig(stages=6)).to_json(), sort_keys=True)
    b = json.dumps(run_suite(G, 3.0, SuiteConfig(stages=6)).to_json(), sort_keys=True)
    assert a == b


def test_strong_subadditivity_section_never_fails():
    rep = run_suite(generate(FamilySpec("tree", {"d": 2})), 2.0, SuiteConfig(stages=6, ssa_trials=5))
    sec = rep.sections["strong_subadditivity"]
    assert sec["experimental"] and sec["label"] is None and sec["trials"] == 5


def test_contradiction_is_loud(monkeypatch):
    import pgraph.suite as suite

    def fake(profile, p):
        return {"label": "hyperbolic", "energies": [], "decreasing": True}

    monkeypatch.setattr(suite, "_radial_null_section", fake)
    with pytest.raises(SuiteContradiction):
        run_suite(generate(FamilySpec("line", {})), 2.0, SuiteConfig(stages=6))
    rep = run_suite(generate(FamilySpec("line", {})), 2.0, SuiteConfig(stages=6, strict=False))
    assert not rep.consistent
    assert rep.agreement["classify"]["null_sequence"] == "disagree"
