from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from shapegraph.cli import main
from shapegraph.formats import read_document, write_graph
from shapegraph.graph import ShapeGraph, from_adjacency, is_connected
from shapegraph.synthetic import random_tree, vessel_tree


@pytest.fixture
def graph_file(tmp_path):
    p = tmp_path / "g.json"
    write_graph(vessel_tree(80, seed=5), p)
    return p


def test_reduce_writes_ladder(graph_file, tmp_path):
    out = tmp_path / "out"
    assert main(["reduce", str(graph_file), str(out), "--resolutions", "0.8,0.6,0.4"]) == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["g_0.400.json", "g_0.600.json", "g_0.800.json", "g_1.000.json"]
    g, meta = read_document(out / "g_0.600.json")
    assert is_connected(g) and meta["resolution"] == 0.6
    assert meta["params"]["theta_tag"] == 0.25 and meta["source"] == "g.json"
    assert [r["stage"] for r in meta["provenance"]] == ["edge", "node", "short", "similar"]


def test_reduce_intermediates(graph_file, tmp_path):
    out = tmp_path / "out"
    assert main(["reduce", str(graph_file), str(out), "--resolutions", "0.5", "--emit-intermediates"]) == 0
    assert (out / "g_0.500_edge.json").exists() and (out / "g_0.500_node.json").exists()


def test_features_modes(tmp_path):
    for i in range(3):
        write_graph(random_tree(15, seed=i), tmp_path / f"t{i}.json")
    (tmp_path / "labels.csv").write_text("id,label\nt0,a\nt1,b\nt2,a\n")
    out = tmp_path / "f.csv"
    assert main(["features", str(tmp_path / "t*.json"), str(out), "--mode", "17", "--labels", str(tmp_path / "labels.csv")]) == 0
    rows = list(csv.reader(out.open()))
    assert len(rows[0]) == 19 and rows[0][:3] == ["id", "label", "n_nodes"]
    assert [r[:2] for r in rows[1:]] == [["t0", "a"], ["t1", "b"], ["t2", "a"]]
    assert main(["features", str(tmp_path / "t*.json"), str(out)]) == 0
    assert len(next(csv.reader(out.open()))) == 39


def features_csv(tmp_path):
    rows = ["id,label,f1,f2"]
    for i in range(12):
        lab = "a" if i % 2 else "b"
        off = 5.0 if lab == "a" else 0.0
        rows.append(f"s{i},{lab},{off + 0.1 * i},{off - 0.05 * i}")
    p = tmp_path / "f.csv"
    p.write_text("\n".join(rows) + "\n")
    return p


def test_classify_deterministic(tmp_path, capsys):
    f = features_csv(tmp_path)
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"h": [1, 5], "eta": [0.01, 0.1]}))
    outs = []
    for k in range(2):
        out = tmp_path / f"s{k}.json"
        table = tmp_path / f"t{k}.csv"
        argv = ["classify", str(f), "--scheme", "kfold:3", "--seed", "7", "--grid", str(grid), "--out", str(out), "--table", str(table)]
        assert main(argv) == 0
        outs.append((out.read_bytes(), table.read_bytes()))
    assert outs[0] == outs[1]
    doc = json.loads(outs[0][0])
    assert doc["max"] == 1.0 and doc["grid_size"] == 4
    assert "average=" in capsys.readouterr().out


def test_connect(tmp_path):
    g = ShapeGraph({0: [0, 0], 1: [1, 0], 2: [5, 0], 3: [6, 0]}, [(0, 0, 1, [[0, 0], [1, 0]]), (1, 2, 3, [[5, 0], [6, 0]])])
    src, dst = tmp_path / "in.json", tmp_path / "out.json"
    write_graph(g, src)
    assert main(["connect", str(src), str(dst)]) == 0
    assert is_connected(read_document(dst)[0])


def test_render_directory_and_file(graph_file, tmp_path):
    out = tmp_path / "out"
    main(["reduce", str(graph_file), str(out)])
    svg = tmp_path / "l.svg"
    assert main(["render", str(out), str(svg), "--color-clusters"]) == 0
    assert svg.read_text().count('class="panel"') == 4
    assert main(["render", str(graph_file), str(tmp_path / "one.svg")]) == 0


@pytest.mark.parametrize(
    "argv, code",
    [
        (["frobnicate"], 1),
        (["reduce"], 1),
        (["classify", "x.csv", "--bogus"], 1),
        (["connect", "/nonexistent.json", "o.json"], 2),
        (["features", "/nonexistent/*.json", "o.csv"], 2),
    ],
)
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code
    assert capsys.readouterr().err


def test_bad_scheme_is_usage_error(tmp_path):
    assert main(["classify", str(features_csv(tmp_path)), "--scheme", "holdout"]) == 1


def test_bad_resolutions_is_usage_error(graph_file, tmp_path):
    assert main(["reduce", str(graph_file), str(tmp_path / "o"), "--resolutions", "0.4,0.6"]) == 1


def test_disconnected_reduce_is_data_error(tmp_path):
    g = from_adjacency({0: [0, 0], 1: [1, 0], 2: [5, 0], 3: [6, 0]}, [(0, 1), (2, 3)])
    p = tmp_path / "d.json"
    write_graph(g, p)
    assert main(["reduce", str(p), str(tmp_path / "o")]) == 2


def test_malformed_swc_is_data_error(tmp_path, capsys):
    p = tmp_path / "bad.swc"
    p.write_text("1 1 0 0 0 1 -1\n1 1 0 0 0 1 -1\n")
    assert main(["connect", str(p), str(tmp_path / "o.json")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "shapegraph.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "reduce" in r.stdout
