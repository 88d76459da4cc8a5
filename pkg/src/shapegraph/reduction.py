"""Terminal trimming, node/edge clustering reductions and the resolution ladder.

Every stage returns a new connected graph. The ``*_stage`` variants also
return a :class:`StageRecord` describing where each input node and edge went.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .clustering import cluster_members, cut_by_ceiling, cut_by_count, linkage
from .curves import edge_length, resample_edge
from .elastic import mean_edge
from .graph import GraphEditor, ShapeGraph, _elide, is_connected, join_components, resolve
from .metrics import chamfer_matrix, effective_resistance

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReductionParams:
    """Tuning values for trimming and the ladder of resolutions.

    ``theta_til`` and ``phi_til`` are percentiles in [0, 100]; ``theta_tag``
    scales the length percentile into the short-edge threshold.
    """

    theta_tag: float = 0.25
    theta_til: float = 50.0
    phi_til: float = 1.0
    resolutions: tuple[float, ...] = (0.8, 0.6, 0.4)

    def __post_init__(self):
        if not 0.0 < self.theta_tag <= 1.0:
            raise ValueError("theta_tag must lie in (0, 1]")
        for name in ("theta_til", "phi_til"):
            if not 0.0 <= getattr(self, name) <= 100.0:
                raise ValueError(f"{name} must lie in [0, 100]")
        rs = tuple(float(r) for r in self.resolutions)
        object.__setattr__(self, "resolutions", rs)
        if any(not 0.0 < r < 1.0 for r in rs):
            raise ValueError("resolutions must lie in (0, 1)")
        if any(b >= a for a, b in zip(rs, rs[1:])):
            raise ValueError("resolutions must be strictly decreasing")


@dataclass
class StageRecord:
    """Where each input element of one stage ended up.

    ``node_map`` / ``edge_map`` send every input id to the output id that
    represents it, or ``None`` when it was removed, elided or absorbed.
    ``node_clusters`` / ``edge_clusters`` hold the cluster label per input id
    for stages that cluster. ``origin`` labels output nodes that were built
    from a multi-member cluster.
    """

    stage: str
    node_map: dict[int, int | None]
    edge_map: dict[int, int | None]
    node_clusters: dict[int, int] = field(default_factory=dict)
    edge_clusters: dict[int, int] = field(default_factory=dict)
    origin: dict[int, int] = field(default_factory=dict)
    skipped: bool = False
    note: str = ""

    def to_json(self) -> dict:
        def keyed(d):
            return {str(k): v for k, v in sorted(d.items())}

        return {
            "stage": self.stage,
            "skipped": self.skipped,
            "note": self.note,
            "node_map": keyed(self.node_map),
            "edge_map": keyed(self.edge_map),
            "node_clusters": keyed(self.node_clusters),
            "edge_clusters": keyed(self.edge_clusters),
            "origin": keyed(self.origin),
        }


def _identity_record(g: ShapeGraph, stage: str, note: str = "") -> StageRecord:
    return StageRecord(
        stage,
        {n: n for n in g.node_ids},
        {e: e for e in g.edge_ids},
        skipped=True,
        note=note,
    )


def _finish(ed: GraphEditor, g: ShapeGraph, stage: str, node_map, edge_map, **extra):
    """Elide, then route the maps through any edge concatenations."""
    removed, replaced = _elide(ed, extra.pop("elide_only", None))
    node_map = {k: (v if v in ed.nodes else None) for k, v in node_map.items()}
    edge_map = {k: (None if v is None else resolve(replaced, v)) for k, v in edge_map.items()}
    edge_map = {k: (v if v in ed.edges else None) for k, v in edge_map.items()}
    out = ed.freeze()
    return out, StageRecord(stage, node_map, edge_map, **extra)


def _percentile(values, q: float) -> float:
    return float(np.percentile(np.asarray(values, dtype=float), q))


# ---------------------------------------------------------------------------
# terminal trimming
# ---------------------------------------------------------------------------

def trim_short_terminals_stage(g: ShapeGraph, theta_tag: float, theta_til: float):
    if g.n_edges == 0:
        return g, _identity_record(g, "short", "no edges")
    lengths = {e.id: edge_length(e.curve) for e in g.edges}
    threshold = theta_tag * _percentile(list(lengths.values()), theta_til)
    ed = g.edit()
    removed_nodes: set[int] = set()
    removed_edges: set[int] = set()
    all_replaced: dict[int, int] = {}
    while True:
        doomed = []
        for eid in sorted(ed.edges):
            e = ed.edges[eid]
            if eid not in lengths:
                lengths[eid] = edge_length(e.curve)
            if (ed.degree(e.u) == 1 or ed.degree(e.v) == 1) and lengths[eid] < threshold:
                doomed.append(eid)
        if not doomed:
            break
        if len(doomed) == len(ed.edges):
            log.warning("short-terminal trimming would delete every edge; stage skipped")
            return g, _identity_record(g, "short", "would delete last edge")
        touched = set()
        for eid in doomed:
            e = ed.remove_edge(eid)
            removed_edges.add(eid)
            touched.update((e.u, e.v))
        for n in sorted(touched):
            if ed.degree(n) == 0:
                ed.remove_node(n)
                removed_nodes.add(n)
        fresh = [n for n in touched if n in ed.nodes and ed.degree(n) == 2]
        gone, replaced = _elide(ed, fresh)
        removed_nodes.update(gone)
        all_replaced.update(replaced)
    node_map = {n: (None if n in removed_nodes else n) for n in g.node_ids}
    edge_map = {}
    for eid in g.edge_ids:
        if eid in removed_edges:
            edge_map[eid] = None
            continue
        final = resolve(all_replaced, eid)
        # an edge folded into a concatenation that was later trimmed is gone too
        edge_map[eid] = final if final in ed.edges else None
    return ed.freeze(), StageRecord("short", node_map, edge_map)


def trim_short_terminals(g: ShapeGraph, theta_tag: float = 0.25, theta_til: float = 50.0) -> ShapeGraph:
    """Repeatedly drop terminal edges shorter than ``theta_tag`` times the
    ``theta_til`` percentile of edge lengths (fixed on entry), eliding new
    degree-two nodes between rounds."""
    return trim_short_terminals_stage(g, theta_tag, theta_til)[0]


def _curves(edges) -> list[np.ndarray]:
    T = max(len(e.curve) for e in edges)
    return [e.curve if len(e.curve) == T else resample_edge(e.curve, T) for e in edges]


def trim_similar_terminals_stage(g: ShapeGraph, phi_til: float):
    if g.n_edges < 2:
        return g, _identity_record(g, "similar", "fewer than two edges")
    edges = g.edges
    D = chamfer_matrix(_curves(edges))
    radius = _percentile(D[np.triu_indices(len(edges), 1)], phi_til)
    deg = g.degrees()
    terminal = [i for i, e in enumerate(edges) if deg[e.u] == 1 or deg[e.v] == 1]
    if len(terminal) < 2:
        return g, _identity_record(g, "similar", "fewer than two terminal edges")
    labels = cut_by_ceiling(linkage(D[np.ix_(terminal, terminal)], "single"), radius)
    clusters = {edges[terminal[i]].id: int(lab) for i, lab in enumerate(labels)}
    doomed = []
    for group in cluster_members(labels):
        members = [edges[terminal[i]] for i in group]
        keep = max(members, key=lambda e: (edge_length(e.curve), -e.id))
        doomed.extend(e.id for e in members if e.id != keep.id)
    if not doomed:
        rec = _identity_record(g, "similar")
        rec.skipped = False
        rec.edge_clusters = clusters
        return g, rec
    if len(doomed) == g.n_edges:
        log.warning("similar-terminal trimming would delete every edge; stage skipped")
        return g, _identity_record(g, "similar", "would delete last edge")
    ed = g.edit()
    touched = set()
    for eid in sorted(doomed):
        e = ed.remove_edge(eid)
        touched.update((e.u, e.v))
    dropped = set()
    for n in sorted(touched):
        if ed.degree(n) == 0:
            ed.remove_node(n)
            dropped.add(n)
    node_map = {n: (None if n in dropped else n) for n in g.node_ids}
    edge_map = {e: (None if e in doomed else e) for e in g.edge_ids}
    fresh = [n for n in touched if n in ed.nodes and ed.degree(n) == 2]
    return _finish(ed, g, "similar", node_map, edge_map, edge_clusters=clusters, elide_only=fresh)


def trim_similar_terminals(g: ShapeGraph, phi_til: float = 1.0) -> ShapeGraph:
    """Cluster terminal edges by chamfer distance (single linkage, no merge
    above the ``phi_til`` percentile of all pairwise distances) and keep only
    the longest edge of each cluster."""
    return trim_similar_terminals_stage(g, phi_til)[0]


def trim_stage(g: ShapeGraph, params: ReductionParams):
    g1, r1 = trim_short_terminals_stage(g, params.theta_tag, params.theta_til)
    g2, r2 = trim_similar_terminals_stage(g1, params.phi_til)
    return g2, [r1, r2]


def trim(g: ShapeGraph, params: ReductionParams | None = None) -> ShapeGraph:
    """Short-terminal trimming followed by similar-terminal trimming."""
    return trim_stage(g, params or ReductionParams())[0]


# ---------------------------------------------------------------------------
# clustering reductions
# ---------------------------------------------------------------------------

def _mean_or_straight(shapes, a, b, T) -> np.ndarray:
    if np.array_equal(a, b):
        # coincident cluster means: a zero-length edge keeps adjacency
        return np.repeat(np.asarray(a, dtype=float)[None, :], T, axis=0)
    return mean_edge(shapes, a, b, T)


def reduce_nodes_stage(g: ShapeGraph, n_r: int):
    n = g.n_nodes
    if not 1 <= n_r < n:
        raise ValueError(f"target not a reduction: {n_r} vs {n} nodes")
    ids = g.node_ids
    R = effective_resistance(g)
    labels = cut_by_count(linkage(R, "complete"), n_r)
    groups = cluster_members(labels)
    label_of = {ids[i]: int(labels[i]) for i in range(n)}
    ed = GraphEditor.blank_like(g)
    rep: dict[int, int] = {}
    origin = {}
    for lab, group in enumerate(groups):
        if len(group) == 1:
            nid = ids[group[0]]
            ed.put_node(nid, g.nodes[nid])
        else:
            nid = ed.add_node(np.mean([g.nodes[ids[i]] for i in group], axis=0))
            origin[nid] = lab
        rep[lab] = nid

    between: dict[tuple[int, int], list] = {}
    for e in g.edges:
        a, b = label_of[e.u], label_of[e.v]
        if a != b:
            between.setdefault((min(a, b), max(a, b)), []).append(e)
    edge_map: dict[int, int | None] = {e: None for e in g.edge_ids}
    T = max((len(e.curve) for e in g.edges), default=30)
    for (a, b), members in sorted(between.items()):
        if len(members) == 1 and len(groups[a]) == 1 and len(groups[b]) == 1:
            ed.put_edge(members[0])
            edge_map[members[0].id] = members[0].id
            continue
        shapes = [e.oriented_from(e.u if label_of[e.u] == a else e.v) for e in members]
        curve = _mean_or_straight(shapes, ed.nodes[rep[a]], ed.nodes[rep[b]], T)
        new = ed.add_edge(rep[a], rep[b], curve)
        for e in members:
            edge_map[e.id] = new
    node_map = {nid: rep[label_of[nid]] for nid in ids}
    return _finish(ed, g, "node", node_map, edge_map, node_clusters=label_of, origin=origin)


def reduce_nodes(g: ShapeGraph, n_r: int) -> ShapeGraph:
    """Complete-linkage clustering of nodes under effective resistance, cut to
    ``n_r`` clusters; each cluster collapses to its mean position and each
    adjacent cluster pair gets one elastic-mean edge."""
    return reduce_nodes_stage(g, n_r)[0]


def reduce_edges_stage(g: ShapeGraph, m_r: int):
    m = g.n_edges
    if not 1 <= m_r < m:
        raise ValueError(f"target not a reduction: {m_r} vs {m} edges")
    edges = g.edges
    D = chamfer_matrix(_curves(edges))
    labels = cut_by_count(linkage(D, "average"), m_r)
    groups = cluster_members(labels)
    label_of = {edges[i].id: int(labels[i]) for i in range(m)}
    true = [lab for lab, grp in enumerate(groups) if len(grp) > 1]
    singles = [edges[grp[0]] for grp in groups if len(grp) == 1]

    ed = GraphEditor.blank_like(g)
    for e in singles:
        for nid in (e.u, e.v):
            if nid not in ed.nodes:
                ed.put_node(nid, g.nodes[nid])
    for e in singles:
        ed.put_edge(e)

    rep: dict[int, int] = {}
    origin = {}
    for lab in true:
        ends = sorted({n for i in groups[lab] for n in (edges[i].u, edges[i].v)})
        rep[lab] = ed.add_node(np.mean([g.nodes[n] for n in ends], axis=0))
        origin[rep[lab]] = lab

    # which true clusters touch each input node, and through which edges
    touching: dict[int, dict[int, list]] = {}
    for lab in true:
        for i in groups[lab]:
            e = edges[i]
            for n in {e.u, e.v}:
                touching.setdefault(n, {}).setdefault(lab, []).append(e)
    singles_at: dict[int, list] = {}
    for e in singles:
        singles_at.setdefault(e.u, []).append(e)
        singles_at.setdefault(e.v, []).append(e)

    T = max(len(e.curve) for e in edges)
    # cluster-cluster adjacency through shared input nodes
    shared: dict[tuple[int, int], list[int]] = {}
    for n in sorted(touching):
        labs = sorted(touching[n])
        for x in range(len(labs)):
            for y in range(x + 1, len(labs)):
                shared.setdefault((labs[x], labs[y]), []).append(n)
    for (a, b), junctions in sorted(shared.items()):
        shapes, seen = [], set()
        for n in junctions:
            for e in touching[n][a]:
                if e.id not in seen:
                    seen.add(e.id)
                    shapes.append(e.oriented_to(n))
            for e in touching[n][b]:
                if e.id not in seen:
                    seen.add(e.id)
                    shapes.append(e.oriented_from(n))
        curve = _mean_or_straight(shapes, ed.nodes[rep[a]], ed.nodes[rep[b]], T)
        ed.add_edge(rep[a], rep[b], curve)
    # retained singleton endpoints adjacent to clusters they touch
    for n in sorted(singles_at):
        for lab in sorted(touching.get(n, {})):
            shapes = [e.oriented_from(n) for e in singles_at[n]]
            shapes += [e.oriented_from(n) for e in touching[n][lab]]
            curve = _mean_or_straight(shapes, ed.nodes[n], ed.nodes[rep[lab]], T)
            ed.add_edge(n, rep[lab], curve)

    node_map: dict[int, int | None] = {}
    for n in g.node_ids:
        if n in ed.nodes:
            node_map[n] = n
        elif n in touching:
            node_map[n] = rep[min(touching[n])]
        else:
            node_map[n] = None
    edge_map = {e.id: (e.id if e.id in ed.edges else None) for e in edges}
    note = ""
    if not is_connected(ed.freeze()):
        note = "output disconnected; rejoined"
        log.info("edge clustering split the graph; rejoining components")
        joined = join_components(ed.freeze(), T)
        ed = joined.edit()
    return _finish(ed, g, "edge", node_map, edge_map, edge_clusters=label_of, origin=origin, note=note)


def reduce_edges(g: ShapeGraph, m_r: int) -> ShapeGraph:
    """Average-linkage clustering of edges under chamfer distance, cut to
    ``m_r`` clusters; multi-edge clusters collapse to a node at the mean of
    their endpoints while singleton edges are kept verbatim."""
    return reduce_edges_stage(g, m_r)[0]


# ---------------------------------------------------------------------------
# multi-resolution ladder
# ---------------------------------------------------------------------------

@dataclass
class Level:
    resolution: float
    graph: ShapeGraph
    edge_target: int | None = None
    node_target: int | None = None
    edge_stage: ShapeGraph | None = None
    node_stage: ShapeGraph | None = None
    records: list[StageRecord] = field(default_factory=list)


@dataclass
class MultiResResult:
    levels: list[Level]
    params: ReductionParams

    @property
    def graphs(self) -> dict[float, ShapeGraph]:
        return {lv.resolution: lv.graph for lv in self.levels}

    @property
    def base(self) -> ShapeGraph:
        return self.levels[0].graph


def _ceil_target(rho: float, count: int) -> int:
    # guard against products like 0.6 * 5 = 3.0000000000000004
    return max(1, math.ceil(rho * count - 1e-9))


def multires(g: ShapeGraph, params: ReductionParams | None = None) -> MultiResResult:
    """Trim, then for each resolution run edge clustering, node clustering and
    trimming on the previous level.

    Count targets come from the trimmed base graph. A clustering step whose
    target is not below the current count is skipped. The node target is
    also capped at the previous level's node count so the ladder never grows.
    """
    params = params or ReductionParams()
    base, recs = trim_stage(g, params)
    m0, n0 = base.n_edges, base.n_nodes
    levels = [Level(1.0, base, records=recs)]
    current = base
    for rho in params.resolutions:
        m_r = _ceil_target(rho, m0)
        n_r = _ceil_target(rho, n0)
        records = []
        if m_r < current.n_edges:
            g_edge, rec = reduce_edges_stage(current, m_r)
        else:
            g_edge, rec = current, _identity_record(current, "edge", f"target {m_r} not a reduction")
        records.append(rec)
        node_target = min(n_r, current.n_nodes)
        if node_target < g_edge.n_nodes:
            g_node, rec = reduce_nodes_stage(g_edge, node_target)
        else:
            g_node, rec = g_edge, _identity_record(g_edge, "node", f"target {node_target} not a reduction")
        records.append(rec)
        g_r, trim_recs = trim_stage(g_node, params)
        records.extend(trim_recs)
        levels.append(Level(rho, g_r, m_r, n_r, g_edge, g_node, records))
        current = g_r
    return MultiResResult(levels, params)
