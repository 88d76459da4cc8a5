from __future__ import annotations

import json

import numpy as np
import pytest

from shapegraph.curves import edge_length
from shapegraph.formats import (
    FormatError,
    atomic_write,
    dumps_features,
    dumps_graph,
    graph_from_dict,
    graph_to_dict,
    loads_graph,
    parse_swc,
    read_document,
    read_features,
    read_labels,
    read_swc_records,
    write_graph,
)
from shapegraph.graph import ShapeGraph, is_connected
from shapegraph.synthetic import random_tree

CHAIN = "1 1 0 0 0 1 -1\n2 3 1 0 0 1 1\n3 3 2 0 0 1 2\n"

FORK = """# soma then two dendrites
1 1 0 0 0 2.0 -1
2 3 1 0 0 1.0 1
3 3 2 0 0 1.0 2
4 3 0 1 0 1.0 1
5 3 0 2 0 1.0 4
"""


def test_swc_chain():
    g = parse_swc(CHAIN)
    assert g.n_nodes == 2 and g.n_edges == 1 and g.dim == 3
    assert abs(edge_length(g.edges[0].curve) - 2.0) < 1e-12
    assert len(g.edges[0].curve) == 30


def test_swc_root_with_two_children():
    g = parse_swc(FORK, T=11)
    assert g.n_nodes == 3 and g.n_edges == 2
    assert g.degrees() == {0: 2, 1: 1, 2: 1}
    assert all(len(e.curve) == 11 for e in g.edges)


def test_swc_branch_point_becomes_node():
    text = FORK + "6 3 0 3 0 1 5\n7 3 1 3 0 1 5\n"
    g = parse_swc(text)
    assert sorted(g.degrees().values()) == [1, 1, 1, 2, 3]


def test_swc_records_keep_columns():
    recs = read_swc_records(FORK)
    assert recs[0].type_code == 1 and recs[0].radius == 2.0 and recs[0].parent == -1
    assert recs[0].line == 2


@pytest.mark.parametrize(
    "text, match",
    [
        ("# nothing\n\n", "no records"),
        ("1 1 0 0 0 1 -1\n1 3 1 0 0 1 1\n", "line 2: duplicate index"),
        ("1 1 0 0 0 1 -1\n2 3 1 0 0 1 9\n", "line 2: parent 9"),
        ("1 1 0 0 0 1 -1\n2 3 1 0 0\n", "line 2: expected 7 columns"),
        ("1 1 0 0 0 1 -1\n2 3 x 0 0 1 1\n", "line 2: malformed"),
        ("1 1 0 0 0 1 2\n2 3 1 0 0 1 1\n", "cycle"),
    ],
)
def test_swc_errors(text, match):
    with pytest.raises(FormatError, match=match):
        parse_swc(text)


def test_swc_forest_is_joined():
    text = CHAIN + "4 1 10 0 0 1 -1\n5 3 11 0 0 1 4\n"
    g = parse_swc(text)
    assert is_connected(g) and g.n_edges == 3


def test_swc_metadata_and_fixed_point(tmp_path):
    src = tmp_path / "cell.swc"
    src.write_text(FORK)
    g, meta = read_document(src)
    assert meta["source"] == "cell.swc"
    assert meta["swc_nodes"]["0"] == {"index": 1, "type": 1, "radius": 2.0}
    write_graph(g, tmp_path / "a.json", meta)
    g2, meta2 = read_document(tmp_path / "a.json")
    assert g2 == g and meta2 == meta
    write_graph(g2, tmp_path / "b.json", meta2)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


@pytest.mark.parametrize("seed", range(5))
def test_json_round_trip_bit_exact(seed):
    rng = np.random.default_rng(seed)
    g = random_tree(20, dim=int(rng.integers(2, 4)), seed=seed)
    text = dumps_graph(g, {"resolution": 0.8})
    h = loads_graph(text)
    assert h == g and h.next_node_id == g.next_node_id and h.next_edge_id == g.next_edge_id
    assert dumps_graph(h, {"resolution": 0.8}) == text


def test_json_empty_edge_graph():
    g = ShapeGraph({4: [1.0, 2.0]})
    doc = json.loads(dumps_graph(g))
    assert doc["edges"] == [] and doc["schema_version"] == 1
    assert loads_graph(dumps_graph(g)) == g


def test_json_missing_node():
    doc = graph_to_dict(random_tree(5, seed=1))
    doc["edges"][0]["u"] = 999
    with pytest.raises(ValueError, match="missing node"):
        graph_from_dict(doc)


def test_json_schema_mismatch():
    doc = graph_to_dict(random_tree(5, seed=1))
    doc["schema_version"] = 2
    with pytest.raises(FormatError, match="schema version"):
        graph_from_dict(doc)


def test_json_rejects_incoherent_endpoints():
    doc = graph_to_dict(random_tree(5, seed=1))
    doc["edges"][0]["points"][0][0] += 1.0
    with pytest.raises(ValueError):
        graph_from_dict(doc)


def test_generic_node_edge_list(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(json.dumps({"nodes": [[0, 0], [3, 4], [3, 0]], "edges": [[0, 1], [1, 2]]}))
    g = read_document(p, T=7)[0]
    assert g.n_nodes == 3 and g.n_edges == 2 and len(g.edges[0].curve) == 7
    assert abs(edge_length(g.edges[0].curve) - 5.0) < 1e-12


def test_invalid_json(tmp_path):
    p = tmp_path / "g.json"
    p.write_text("{nope")
    with pytest.raises(FormatError):
        read_document(p)


def test_feature_csv_round_trip(tmp_path):
    X = np.array([[1.0, 1 / 3], [2.5, np.pi]])
    p = tmp_path / "f.csv"
    atomic_write(p, dumps_features([("a", "x", X[0]), ("b", None, X[1])], ["f1", "f2"]))
    ids, labels, Y, names = read_features(p)
    assert ids == ["a", "b"] and labels == ["x", ""] and names == ["f1", "f2"]
    np.testing.assert_array_equal(X, Y)


def test_feature_csv_errors(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("name,label,f1\n")
    with pytest.raises(FormatError):
        read_features(p)
    p.write_text("id,label,f1\na,x,1,2\n")
    with pytest.raises(FormatError, match="line 2"):
        read_features(p)


def test_labels_file(tmp_path):
    p = tmp_path / "l.csv"
    p.write_text("id,label\ng1,dense\n# skip\ng2, sparse\n")
    assert read_labels(p) == {"g1": "dense", "g2": "sparse"}


def test_atomic_write_leaves_no_temp(tmp_path):
    p = tmp_path / "sub" / "x.txt"
    atomic_write(p, "hi")
    atomic_write(p, b"bytes")
    assert p.read_bytes() == b"bytes"
    assert [q.name for q in p.parent.iterdir()] == ["x.txt"]
