from __future__ import annotations

import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapegraph.clustering import cut_by_count, linkage
from shapegraph.curves import edge_length
from shapegraph.graph import from_adjacency, is_connected, validate
from shapegraph.metrics import effective_resistance
from shapegraph.reduction import (
    ReductionParams,
    multires,
    reduce_edges,
    reduce_edges_stage,
    reduce_nodes,
    reduce_nodes_stage,
    trim,
    trim_short_terminals,
    trim_short_terminals_stage,
    trim_similar_terminals,
)
from shapegraph.synthetic import random_tree, vessel_tree


def graph(pos, pairs, T=30):
    return from_adjacency({k: np.asarray(v, float) for k, v in pos.items()}, pairs, T)


def y_graph(stub=0.1):
    pos = {0: [0, 0], 1: [-10, 0], 2: [10, 0], 3: [0, stub]}
    return graph(pos, [(1, 0), (0, 2), (0, 3)])


def assert_total(record, g_in):
    assert set(record.node_map) == set(g_in.node_ids)
    assert set(record.edge_map) == set(g_in.edge_ids)


# -- params -------------------------------------------------------------------

def test_params_validation():
    ReductionParams()
    with pytest.raises(ValueError):
        ReductionParams(theta_tag=0.0)
    with pytest.raises(ValueError):
        ReductionParams(theta_til=101)
    with pytest.raises(ValueError):
        ReductionParams(resolutions=(0.4, 0.6))
    with pytest.raises(ValueError):
        ReductionParams(resolutions=(1.0,))


# -- short terminals -------------------------------------------------------------

def test_short_trim_leaves_long_graph_alone():
    g = y_graph(stub=9.0)
    assert trim_short_terminals(g, 0.25, 50) == g


def test_short_trim_y_graph():
    out = trim_short_terminals(y_graph(), 0.5, 50)
    assert out.n_edges == 1 and out.node_ids == [1, 2]
    assert abs(edge_length(out.edges[0].curve) - 20.0) < 1e-9


def test_short_trim_two_rounds():
    pos = {0: [0, 0], 1: [-10, 0], 2: [10, 0], 3: [0, 1], 4: [0, 2]}
    g = graph(pos, [(1, 0), (0, 2), (0, 3), (3, 4)])
    out, rec = trim_short_terminals_stage(g, 0.5, 50)
    assert out.node_ids == [1, 2] and out.n_edges == 1
    assert_total(rec, g)
    assert rec.node_map[3] is None and rec.node_map[4] is None
    assert rec.edge_map[2] is None and rec.edge_map[3] is None
    # the two arms were concatenated into the surviving edge
    assert rec.edge_map[0] == rec.edge_map[1] == out.edge_ids[0]


def test_short_trim_refuses_to_delete_everything(caplog):
    g = graph({0: [0, 0], 1: [1, 0], 2: [2, 0]}, [(0, 1), (1, 2)])
    with caplog.at_level(logging.WARNING):
        out = trim_short_terminals(g, 2.0, 50)
    assert out == g
    assert "every edge" in caplog.text


def test_short_trim_threshold_fixed_at_entry():
    # lengths 10, 10, 4, 1 give a bar of 0.5 * 7 = 3.5; once the 1-stub goes
    # a recomputed bar would be 5 and take the 4-stub too
    pos = {0: [0, 0], 1: [-10, 0], 2: [10, 0], 3: [0, 4], 4: [0, 5]}
    g = graph(pos, [(1, 0), (0, 2), (0, 3), (3, 4)])
    out = trim_short_terminals(g, 0.5, 50)
    assert out.node_ids == [0, 1, 2, 3] and out.n_edges == 3


# -- similar terminals ---------------------------------------------------------------

def twig_graph():
    pos = {0: [0, 0], 1: [10, 0], 2: [20, 0], 3: [10, 3], 4: [10.2, 2]}
    return graph(pos, [(0, 1), (1, 2), (1, 3), (1, 4)])


def test_similar_trim_removes_shorter_twin():
    out = trim_similar_terminals(twig_graph(), 1.0)
    assert out.n_edges == 3 and 4 not in out.nodes and 3 in out.nodes


def test_similar_trim_distant_terminals_unchanged():
    # the small square's sides set a tiny radius; the two arms are far apart
    pos = {0: [0, 0], 1: [1, 0], 2: [1, 1], 3: [0, 1], 4: [-20, 0], 5: [21, 1]}
    g = graph(pos, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (2, 5)])
    assert trim_similar_terminals(g, 1.0) == g


def test_similar_trim_cycle_unchanged():
    pos = {0: [0, 0], 1: [1, 0], 2: [1, 1], 3: [0, 1]}
    g = graph(pos, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert trim_similar_terminals(g, 50.0) == g


def test_trim_removes_stub_and_twin():
    pos = {0: [0, 0], 1: [10, 0], 2: [20, 0], 3: [10, 3], 4: [10.2, 2], 5: [-10, 0], 6: [0, 0.1]}
    g = graph(pos, [(0, 1), (1, 2), (1, 3), (1, 4), (5, 0), (0, 6)])
    out = trim(g, ReductionParams(theta_tag=0.25, theta_til=50, phi_til=1.0))
    assert 6 not in out.nodes and 4 not in out.nodes
    assert is_connected(out)


# -- node clustering ---------------------------------------------------------------

def test_reduce_nodes_rejects_non_reduction():
    g = y_graph(5)
    with pytest.raises(ValueError, match="target not a reduction"):
        reduce_nodes(g, g.n_nodes)


def test_reduce_nodes_merges_closest_pair():
    g = vessel_tree(30, loops=2, seed=4)
    R = effective_resistance(g)
    labels = cut_by_count(linkage(R, "complete"), g.n_nodes - 1)
    pair = [g.node_ids[i] for i in np.flatnonzero(np.bincount(labels)[labels] == 2)]
    out, rec = reduce_nodes_stage(g, g.n_nodes - 1)
    assert rec.node_map[pair[0]] == rec.node_map[pair[1]]
    merged = rec.node_map[pair[0]]
    if merged is not None:
        np.testing.assert_allclose(out.nodes[merged], (g.nodes[pair[0]] + g.nodes[pair[1]]) / 2)
    assert is_connected(out) and validate(out) == []


def test_reduce_nodes_two_blobs():
    pos, pairs = {}, []
    for c, base in enumerate([0, 4]):
        off = np.array([100.0 * c, 0.0])
        square = [[0, 0], [1, 0], [1, 1], [0, 1]]
        for k, p in enumerate(square):
            pos[base + k] = off + p
        pairs += [(base + a, base + b) for a in range(4) for b in range(a + 1, 4)]
    pairs.append((1, 4))
    g = graph(pos, pairs)
    out = reduce_nodes(g, 2)
    assert out.n_nodes == 2 and out.n_edges == 1
    a, b = (out.nodes[n] for n in out.node_ids)
    np.testing.assert_allclose(sorted([a[0], b[0]]), [0.5, 100.5])
    # the mean of the single bridge, refit to the blob centres
    assert abs(edge_length(out.edges[0].curve) - 100.0) < 1e-9


def test_reduce_nodes_symmetric_square():
    pos = {0: [0, 0], 1: [1, 0], 2: [1, 1], 3: [0, 1]}
    g = graph(pos, [(0, 1), (1, 2), (2, 3), (3, 0)])
    out, rec = reduce_nodes_stage(g, 2)
    assert out.n_nodes == 2 and out.n_edges == 1
    a, b = (out.nodes[n] for n in out.node_ids)
    np.testing.assert_allclose((a + b) / 2, [0.5, 0.5], atol=1e-12)
    assert_total(rec, g)


def test_reduce_nodes_keeps_singletons_verbatim():
    g = vessel_tree(40, loops=3, seed=1)
    out, rec = reduce_nodes_stage(g, g.n_nodes - 3)
    kept = [n for n, m in rec.node_map.items() if m == n]
    for n in kept:
        assert np.array_equal(out.nodes[n], g.nodes[n]) or n not in out.nodes
    assert all(e.u != e.v for e in out.edges)


# -- edge clustering ---------------------------------------------------------------

def test_reduce_edges_rejects_non_reduction():
    g = y_graph(5)
    with pytest.raises(ValueError):
        reduce_edges(g, g.n_edges)


def test_reduce_edges_shared_endpoint_pair():
    # two short edges meeting at node 1 are far closer to each other than
    # to the long arms
    pos = {0: [0, 0], 1: [0.5, 0.2], 2: [1, 0], 3: [-30, 0], 4: [31, 0], 5: [0.5, 30]}
    g = graph(pos, [(0, 1), (1, 2), (3, 0), (2, 4), (1, 5)])
    out, rec = reduce_edges_stage(g, 4)
    assert rec.edge_clusters[0] == rec.edge_clusters[1]
    new = [n for n in out.node_ids if n not in g.nodes]
    assert len(new) == 1
    np.testing.assert_allclose(out.nodes[new[0]], np.mean([pos[0], pos[1], pos[2]], axis=0))
    # the new node connects to every retained neighbour
    assert sorted(n for e in out.edges for n in (e.u, e.v) if n != new[0]) == [3, 4, 5]
    assert is_connected(out)


def test_reduce_edges_ladder_collapses_to_connected_chain():
    pos, pairs = {}, []
    for k in range(8):
        pos[k] = [float(k), 0.0]
        pos[8 + k] = [float(k), 0.4]
        pairs.append((k, 8 + k))
        if k:
            pairs += [(k - 1, k), (7 + k, 8 + k)]
    g = graph(pos, pairs)
    out = reduce_edges(g, 6)
    assert is_connected(out) and validate(out) == []
    assert out.n_edges < g.n_edges


def test_reduce_edges_merges_closest_pair_only():
    g = vessel_tree(25, loops=1, seed=5)
    out, rec = reduce_edges_stage(g, g.n_edges - 1)
    sizes = np.bincount(list(rec.edge_clusters.values()))
    assert sorted(sizes)[-1] == 2 and len(sizes) == g.n_edges - 1
    assert is_connected(out)


# -- ladder -----------------------------------------------------------------------

def test_multires_skips_when_targets_match():
    g = trim(y_graph(stub=9.0))
    res = multires(g, ReductionParams(resolutions=(0.999,)))
    lv = res.levels[1]
    assert lv.records[0].skipped and lv.records[1].skipped
    assert lv.graph == trim(res.base)


def test_multires_invariants_on_vessel_tree():
    g = vessel_tree(120, loops=4, seed=8)
    res = multires(g)
    n0 = res.base.n_nodes
    counts = [lv.graph.n_nodes for lv in res.levels]
    assert all(b <= a for a, b in zip(counts, counts[1:]))
    for lv in res.levels[1:]:
        assert is_connected(lv.graph) and validate(lv.graph) == []
        assert lv.graph.n_nodes <= math.ceil(lv.resolution * n0 - 1e-9)
        for rec in lv.records:
            assert all(v is None or isinstance(v, int) for v in rec.node_map.values())


@settings(max_examples=6, deadline=None)
@given(st.integers(0, 1000))
def test_multires_random_trees(seed):
    g = random_tree(40, branching=0.6, seed=seed)
    res = multires(g)
    n0 = res.base.n_nodes
    prev = n0
    for lv in res.levels[1:]:
        assert is_connected(lv.graph)
        assert lv.graph.n_nodes <= math.ceil(lv.resolution * n0 - 1e-9)
        assert lv.graph.n_nodes <= prev
        prev = lv.graph.n_nodes


def test_multires_deterministic():
    g = vessel_tree(80, seed=3)
    a, b = multires(g), multires(g)
    assert all(x.graph == y.graph for x, y in zip(a.levels, b.levels))


def test_stage_records_serialise():
    import json

    res = multires(vessel_tree(60, seed=2))
    for lv in res.levels:
        for rec in lv.records:
            json.dumps(rec.to_json())
