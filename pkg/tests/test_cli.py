import io
import json
from pathlib import Path

import pytest

from pgraph import load_graph
from pgraph.cli import SCHEMA, main

DATA = Path(__file__).resolve().parents[1] / "data"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    rc = main(list(argv), out, err)
    return rc, out.getvalue(), err.getvalue()


def run_json(*argv):
    rc, out, err = run(*argv)
    return rc, json.loads(out) if out else None, err


def test_green_on_tree():
    rc, doc, _ = run_json("green", "--family", "tree", "--d", "2", "--p", "2", "--r", "3")
    assert rc == 0 and doc["schema"] == SCHEMA
    assert doc["g"] == pytest.approx(0.125, abs=1e-12)


def test_capacity_of_path_end():
    rc, doc, _ = run_json("capacity", "--graph", str(DATA / "path5.pg"), "--K", "0", "--p", "2")
    assert rc == 0
    assert doc["cap"] == pytest.approx(0.2, abs=1e-12)


def test_classify_antitree_parabolic_at_p3():
    rc, doc, _ = run_json("classify", "--family", "antitree", "--s", "r+1", "--p", "3", "--stages", "200")
    assert rc == 0
    verdict = doc["verdict"]
    assert verdict["label"] == "parabolic"
    assert verdict["evidence"][0]["kind"] == "area-series"
    caps = dict((n, c) for n, c in verdict["evidence"][0]["details"]["radial_capacities"])
    assert caps[200] < 0.05


def test_classify_lattice_is_inconclusive_with_exit_2():
    rc, doc, _ = run_json("classify", "--family", "lattice", "--d", "2", "--p", "2", "--stages", "6")
    assert rc == 2
    assert doc["verdict"]["label"] == "inconclusive"
    assert doc["verdict"]["expected"] == "parabolic"


def test_classify_csv():
    rc, out, _ = run("classify", "--family", "line", "--p", "2", "--stages", "8", "--csv")
    assert rc == 0
    rows = out.strip().splitlines()
    assert rows[0] == "n,cap"
    assert float(rows[-1].split(",")[1]) == pytest.approx(1 / 9)


@pytest.mark.parametrize("argv, code", [
    (["capacity", "--graph", "/nonexistent.pg"], "FILE_ERROR"),
    (["classify"], "NO_TARGET"),
    (["classify", "--family", "tree", "--bogus"], "USAGE"),
    (["classify", "--family", "star", "--w", "k^-1"], "BAD_FAMILY"),
    (["green", "--family", "line", "--p", "2"], "PARABOLIC_SIGNAL"),
    (["capacity", "--graph", str(DATA / "path5.pg"), "--K", "99"], "UNKNOWN_VERTEX"),
])
def test_errors_are_one_line_with_code(argv, code):
    rc, out, err = run(*argv)
    assert rc == 1 and out == ""
    assert err.count("\n") == 1
    assert err.startswith(f"error: {code}: ")


def test_parse_error_reports_line(tmp_path):
    bad = tmp_path / "bad.pg"
    bad.write_text("V 0 1 0\nV 1 x 0\n")
    rc, _, err = run("capacity", "--graph", str(bad))
    assert rc == 1 and "line 2" in err


@pytest.mark.parametrize("argv", [
    ["suite", "--family", "tree", "--p", "2", "--stages", "6"],
    ["check", "--cases", "20", "--seed", "7"],
    ["potential", "--family", "antitree", "--s", "r+1", "--p", "2.5", "--stages", "5", "--csv"],
])
def test_reruns_are_byte_identical(argv):
    a = run(*argv)
    b = run(*argv)
    assert a[0] == 0
    # timings are the only run-dependent field and CSV leaves them out of potential rows
    if "--csv" in argv:
        strip = [",".join(r.split(",")[:-1]) for r in a[1].splitlines()]
        assert strip == [",".join(r.split(",")[:-1]) for r in b[1].splitlines()]
    else:
        assert a[1] == b[1]


def test_gen_roundtrips_through_loader(tmp_path):
    rc, out, _ = run("gen", "--family", "tree", "--d", "2", "--truncation", "3")
    assert rc == 0
    T = load_graph(out)
    assert T.n == 2 ** 5 - 1


def test_obstacle_on_path_file():
    rc, doc, _ = run_json("obstacle", "--graph", str(DATA / "path5.pg"), "--region", "1,2,3,4",
                          "--obstacle", "2=0.8", "--boundary", "0=0,5=0")
    assert rc == 0
    u = dict((v, x) for v, x in doc["u"])
    # a tent over the obstacle: linear on both sides of vertex 2
    assert u[2] == pytest.approx(0.8, abs=1e-9)
    assert u[1] == pytest.approx(0.4, abs=1e-9)
    assert u[3] == pytest.approx(0.8 * 2 / 3, abs=1e-9)


def test_khasminskii_csv_rows():
    rc, out, _ = run("khasminskii", "--family", "line", "--p", "2", "--stages", "2",
                     "--truncation", "40", "--K", "0", "--csv")
    assert rc == 0
    rows = out.strip().splitlines()
    assert rows[0] == "r,kappa" and rows[1] == "0,0.0"


def test_check_battery_passes():
    rc, doc, _ = run_json("check", "--cases", "50")
    assert rc == 0 and doc["pass"]
    assert doc["greens_formula_max"] < 1e-10 and doc["flow_greens_max"] < 1e-10
