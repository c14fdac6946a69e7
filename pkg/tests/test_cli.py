import json
from pathlib import Path

import pytest

from gtlogic.cli import run
from gtlogic.graphs import LabeledGraph, save_graph

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def star(tmp_path):
    path = tmp_path / "g.json"
    save_graph(LabeledGraph(4, ((0, 1), (0, 2), (0, 3)), (frozenset({1, 2}), frozenset({3}))), path)
    return str(path)


def out_of(capsys, argv):
    code = run(argv)
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_check_global_one_labelled(capsys, tmp_path):
    path = tmp_path / "g.json"
    save_graph(LabeledGraph(3, ((0, 1),), (frozenset({2}),)), path)
    code, out, _ = out_of(capsys, ["check", "--formula", "glob>=1 p0", "--graph", str(path)])
    assert code == 0 and out.strip() == "1 1 1"


@pytest.mark.parametrize("target,formula", [
    ("gps-real", "dia>=2 p0"),
    ("basic-gps-real", "(glob p1 & !dia>=3 p0)"),
    ("gt-float", "glob>=2 (p0 | p1)"),
    ("gnn+gc-float", "dia glob>=2 p0"),
    ("gps-float", "(dia>=2 p0 & glob>=3 top)"),
])
def test_compile_then_eval_matches_check(capsys, tmp_path, star, target, formula):
    phi = tmp_path / "f.phi"
    phi.write_text(formula + "\n")
    net = str(tmp_path / "net.json")
    code, out, _ = out_of(capsys, ["compile", "--target", target, "--formula", str(phi), "-o", net, "--ell", "2"])
    assert code == 0
    rep = json.loads((tmp_path / "net.report.json").read_text())
    assert rep["layer_count"] == len(json.loads(Path(net).read_text())["layers"])
    _, got, _ = out_of(capsys, ["eval", "--net", net, "--graph", star])
    _, want, _ = out_of(capsys, ["check", "--formula", formula, "--graph", star])
    assert got == want


def test_eval_values_and_features(capsys, tmp_path, star):
    net = str(tmp_path / "net.json")
    run(["compile", "--formula", "dia p1", "--target", "basic-gps-real", "-o", net, "--ell", "2"])
    capsys.readouterr()
    code, out, _ = out_of(capsys, ["eval", "--net", net, "--graph", star, "--values"])
    assert code == 0 and out.split() == ["1", "0", "0", "0"]
    _, out, _ = out_of(capsys, ["eval", "--net", net, "--graph", star, "--features"])
    assert len(out.strip().splitlines()) == 4
    _, out, _ = out_of(capsys, ["eval", "--net", net, "--graph", star, "--backend", "f64"])
    assert out.strip() == "1 0 0 0"


def test_eval_word(capsys, tmp_path):
    net = str(tmp_path / "net.json")
    run(["compile", "--formula", "glob p0", "--target", "uhgt-float", "-o", net, "--ell", "2"])
    capsys.readouterr()
    _, out, _ = out_of(capsys, ["eval", "--net", net, "--word", "p1 p1 p0"])
    assert out.strip() == "1 1 1"


def test_analyze_golden(capsys, tmp_path):
    path = tmp_path / "a.json"
    code, out, _ = out_of(capsys, ["analyze", "--p", "4", "--q", "3", "-o", str(path)])
    assert code == 0 and "saturation k=47" in out and out.strip().endswith("PASS")
    got, golden = json.loads(path.read_text()), json.loads((GOLDEN / "format_F43.json").read_text())
    got.pop("environment"), golden.pop("environment")
    assert got == golden


def test_verify_exit_codes(capsys, tmp_path):
    code, out, _ = out_of(capsys, ["verify", "--corpus", "gml", "--target", "gnn-float", "--n-max", "2"])
    assert code == 0 and "PASS" in out
    code, out, _ = out_of(capsys, ["verify", "--corpus", "gml", "--target", "gnn-float", "--n-max", "2",
                                   "--mutation", "flip-bias"])
    assert code == 1 and "FAIL" in out


def test_verify_report_replays(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    argv = ["verify", "--formula", "dia>=2 p0", "--formula", "glob p1", "--graphs", "random", "--n-min", "3",
            "--n-max", "5", "--count", "20", "--seed", "11"]
    assert run(argv + ["-o", str(a)]) == 0
    assert run(argv + ["-o", str(b), "--jobs", "2"]) == 0
    assert a.read_text() == b.read_text()


def test_verify_invariance_pairs(capsys):
    code, out, _ = out_of(capsys, ["verify", "--formula", "glob>=2 p0", "--target", "gt-float", "--pairs",
                                   "disjoint-copies", "--count", "30"])
    assert code == 1 and "differences=" in out
    code, _, _ = out_of(capsys, ["verify", "--corpus", "pl-g", "--pairs", "label-ratio", "--count", "20"])
    assert code == 0


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["check", "--formula", "(p0 &", "--word", "p0"],
    ["check", "--formula", "p0"],
    ["analyze", "--p", "4"],
    ["verify", "--n-max", "4"],
    ["verify", "--backend", "f64"],
    ["verify", "--jobs", "0"],
    ["compile", "--formula", "glob>=2 p0", "--target", "gps-real", "-o", "x.json"],
    ["eval", "--net", "missing.json", "--word", "p0"],
])
def test_usage_errors(capsys, argv):
    code, _, err = out_of(capsys, argv)
    assert code == 2 and err


def test_bisim_commands(capsys, tmp_path):
    g1, g2 = tmp_path / "g1.json", tmp_path / "g2.json"
    save_graph(LabeledGraph(1, (), (frozenset({0}),)), g1)
    save_graph(LabeledGraph(2, (), (frozenset({0, 1}),)), g2)
    code, out, _ = out_of(capsys, ["bisim", "--graph1", str(g1), "--graph2", str(g2), "--check", "ratio"])
    assert code == 0 and "q = 1/2" in out
    code, out, _ = out_of(capsys, ["bisim", "--graph1", str(g1), "--graph2", str(g2), "--check", "partition"])
    assert code == 0 and len(out.strip().splitlines()) == 2
    p1, p2 = tmp_path / "p1.json", tmp_path / "p2.json"
    save_graph(LabeledGraph(2, ((0, 1),), ()), p1)
    save_graph(LabeledGraph(3, ((0, 1), (1, 2)), ()), p2)
    code, out, _ = out_of(capsys, ["bisim", "--graph1", str(p1), "--graph2", str(p2), "--check", "game",
                                   "--c", "1", "--rounds", "2"])
    assert code == 1 and "no" in out
    code, _, _ = out_of(capsys, ["bisim", "--graph1", str(p1), "--graph2", str(p2), "--check", "game",
                                 "--c", "1", "--rounds", "1"])
    assert code == 0
    code, _, _ = out_of(capsys, ["bisim", "--graph1", str(p1), "--graph2", str(p2), "--v1", "5"])
    assert code == 2


def test_enumerate(capsys, tmp_path):
    code, out, _ = out_of(capsys, ["enumerate", "--n-max", "2", "--labels", "1"])
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 4 + 64 and len(set(lines)) == 68
    path = tmp_path / "r.jsonl"
    run(["enumerate", "--mode", "random", "--n-max", "5", "--count", "7", "--seed", "2", "-o", str(path)])
    first = path.read_text()
    run(["enumerate", "--mode", "random", "--n-max", "5", "--count", "7", "--seed", "2", "-o", str(path)])
    assert path.read_text() == first and len(first.splitlines()) == 7
    capsys.readouterr()
    _, out, _ = out_of(capsys, ["enumerate", "--mode", "words", "--n-max", "3", "--labels", "2"])
    assert len(out.splitlines()) == 2 + 4 + 8
