import json

import pytest

from isodisplay.cli import EXIT_INPUT, EXIT_OK, EXIT_USAGE, EXIT_VERDICT, main
from isodisplay.core import ell_infinity, group_closure, group_to_json, permutation_matrix, space_to_json
from isodisplay.fixtures import signed_permutations


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def test_graph_norm_isom(capsys):
    code, rep = run_json(capsys, "graph-norm", "isom", "--graph", "fixture:path3")
    assert code == EXIT_OK
    assert rep["result"]["order"] == 4
    assert rep["verdicts"] == {"isometry_group": "PASS", "brute_force_matches": "PASS"}
    assert rep["command"] == ["graph-norm", "isom", "--graph", "fixture:path3"]


def test_graph_norm_rationals(capsys):
    code, rep = run_json(capsys, "graph-norm", "norm", "--graph", "fixture:path3", "--vector", "1,-1,0")
    assert code == EXIT_OK and rep["result"]["norm"] == "5/4"
    code, rep = run_json(capsys, "graph-norm", "norm", "--graph", "fixture:path3", "--vector", "1/2,0,1/2")
    assert rep["result"]["norm"] == "3/5"


def test_vertices_fail_with_witness(capsys):
    code, rep = run_json(capsys, "graph-norm", "vertices", "--graph", "fixture:path3")
    assert code == EXIT_VERDICT
    assert rep["verdicts"]["vertices_are_signed_units"] == "FAIL"
    assert "extra_vertex" in rep["witnesses"]
    code, _ = run(capsys, "graph-norm", "vertices", "--graph", "fixture:path3", "--no-fail-on-verdict")
    assert code == EXIT_OK


def test_free_space_isom(capsys):
    code, rep = run_json(capsys, "free-space", "isom", "--metric", "fixture:equilateral3", "--transform", "concave")
    assert code == EXIT_OK and rep["result"]["order"] == 12


def test_free_space_norm_and_dual(capsys, tmp_path):
    metric = tmp_path / "m.json"
    metric.write_text(json.dumps({"points": ["a", "b", "c"], "d": [[0, 1, 2], [1, 0, 1], [2, 1, 0]]}))
    mol = tmp_path / "mol.json"
    mol.write_text(json.dumps([{"masses": {"a": 1, "b": 1, "c": -2}}, {"masses": {"a": 1, "c": -1}}]))
    code, rep = run_json(capsys, "free-space", "norm", "--metric", str(metric), "--molecule", str(mol),
                         "--threads", "2")
    assert code == EXIT_OK
    assert [v["value"] for v in rep["result"]["values"]] == pytest.approx([3.0, 2.0])
    code, rep = run_json(capsys, "free-space", "dual", "--metric", str(metric), "--molecule", str(mol))
    assert [v["value"] for v in rep["result"]["values"]] == pytest.approx([3.0, 2.0])
    assert rep["result"]["values"][0]["witness"]["a"] == 0


def test_diag_convex_transitive_failure(capsys, tmp_path):
    space = tmp_path / "s.json"
    space.write_text(json.dumps(space_to_json(ell_infinity(2))))
    group = tmp_path / "g.json"
    full = group_closure([permutation_matrix([1, 0]), permutation_matrix([0, 1], [-1, 1])])
    group.write_text(json.dumps(group_to_json(full)))
    code, rep = run_json(capsys, "diag", "convex-transitive", "--space", str(space), "--group", str(group),
                         "--x", "1,0", "--xstar", "1/2,1/2")
    assert code == EXIT_VERDICT
    assert rep["verdicts"]["convex_transitive"] == "FAIL"
    assert rep["witnesses"]["pair"]["sup"] == pytest.approx(0.5)


def test_diag_rotations(capsys, tmp_path):
    space = tmp_path / "e.json"
    space.write_text(json.dumps({"kind": "euclidean", "dim": 2}))
    code, rep = run_json(capsys, "diag", "necessary", "--space", str(space), "--group", "orthogonal")
    assert code == EXIT_OK and rep["verdicts"]["witness"] == "NO-WITNESS"


def test_display_run_and_verify(capsys, tmp_path):
    out = tmp_path / "display.json"
    code, text = run(capsys, "display", "run", "--group", "fixture:pm-id-2", "--samples", "200",
                     "--out", str(out))
    assert code == EXIT_OK
    assert "round_trip: PASS" in text
    rep = json.loads(out.read_text())
    saved = tmp_path / "result.json"
    saved.write_text(json.dumps(rep["result"]["display"]))
    code, rep2 = run_json(capsys, "display", "verify", "--result", str(saved))
    assert code == EXIT_OK and rep2["verdicts"]["round_trip"] == "PASS"


def test_gadget(capsys):
    code, rep = run_json(capsys, "gadget", "--group", "fixture:S2")
    assert code == EXIT_OK and rep["verdicts"] == {"gadget": "PASS"}


def test_determinism(capsys):
    argv = ["free-space", "isom", "--metric", "fixture:rigid-metric4", "--transform", "concave", "--seed", "3"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]
    argv = ["display", "--group", "fixture:signed-swap-4", "--samples", "200", "--seed", "5"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_timing_is_opt_in(capsys):
    _, rep = run_json(capsys, "graph-norm", "pairs", "--graph", "fixture:path3")
    assert "timing" not in rep
    _, rep = run_json(capsys, "graph-norm", "pairs", "--graph", "fixture:path3", "--timing")
    assert rep["timing"]["seconds"] >= 0


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "bogus")[0] == EXIT_USAGE
    assert run(capsys, "graph-norm", "isom")[0] == EXIT_USAGE
    assert run(capsys, "graph-norm", "isom", "--graph", str(tmp_path / "missing.json"))[0] == EXIT_INPUT
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "graph-norm", "isom", "--graph", str(bad))[0] == EXIT_INPUT
    disconnected = tmp_path / "g.json"
    disconnected.write_text(json.dumps({"n": 3, "edges": [[0, 1]]}))
    assert run(capsys, "graph-norm", "isom", "--graph", str(disconnected))[0] == EXIT_INPUT
    assert run(capsys, "free-space", "norm", "--metric", "fixture:equilateral3")[0] == EXIT_INPUT
    assert run(capsys, "diag", "lur", "--space", "fixture:none", "--x", "1,0")[0] == EXIT_INPUT
    assert run(capsys, "graph-norm", "isom", "--graph", "fixture:path3", "--threads", "0")[0] == EXIT_USAGE


def test_selftest_fixture_list_and_subset(capsys):
    _, rep = run_json(capsys, "selftest", "--list-fixtures")
    names = {f["name"] for f in rep["result"]["fixtures"]}
    assert {"path3", "equilateral3", "signed-swap-4", "tree7"} <= names
    code, rep = run_json(capsys, "selftest", "--only", "1,8")
    assert code == EXIT_OK
    assert rep["verdicts"] == {"criterion_1": "PASS", "criterion_8": "PASS"}


def test_group_file_round_trip(capsys, tmp_path):
    g = tmp_path / "g.json"
    g.write_text(json.dumps(group_to_json(signed_permutations(3))))
    assert run(capsys, "diag", "distinguished", "--space", "fixture:none", "--group", str(g), "--x", "3,2,1")[0] \
        == EXIT_INPUT
    s = tmp_path / "e3.json"
    s.write_text(json.dumps({"kind": "euclidean", "dim": 3}))
    code, rep = run_json(capsys, "diag", "distinguished", "--space", str(s), "--group", str(g), "--x", "3,2,1")
    assert code == EXIT_OK and rep["verdicts"]["distinguished"] == "PASS"
