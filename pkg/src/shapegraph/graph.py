"""Shape-graph data model and structural edits.

A :class:`ShapeGraph` is an immutable value: nodes are points in R^d and
edges carry full ``(T, d)`` polylines whose first and last samples coincide
with the endpoint nodes. Every edit returns a new graph. Multi-step rewrites
go through :class:`GraphEditor` and are frozen at the end.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy.spatial import cKDTree

from .curves import concatenate, resample_edge
from .elastic import mean_edge

log = logging.getLogger(__name__)


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int
    curve: np.ndarray

    def other(self, node: int) -> int:
        return self.v if node == self.u else self.u

    def oriented_from(self, node: int) -> np.ndarray:
        """Curve running away from ``node``."""
        return np.array(self.curve if node == self.u else self.curve[::-1])

    def oriented_to(self, node: int) -> np.ndarray:
        """Curve running into ``node``."""
        return np.array(self.curve if node == self.v else self.curve[::-1])


class ShapeGraph:
    """Nodes in R^d joined by curve-valued edges.

    Parameters
    ----------
    nodes : mapping of node id to coordinates
    edges : iterable of :class:`Edge` or ``(id, u, v, curve)`` tuples
    dim : optional, inferred from the first node
    next_node_id, next_edge_id : id counters carried across edits so new ids
        strictly increase through a pipeline
    snap : copy node positions onto curve endpoints (endpoint coherence)
    check : raise ``ValueError`` on any invariant violation
    """

    __slots__ = ("dim", "_nodes", "_edges", "next_node_id", "next_edge_id", "_incident")

    def __init__(
        self,
        nodes: Mapping[int, Iterable[float]],
        edges: Iterable = (),
        *,
        dim: int | None = None,
        next_node_id: int | None = None,
        next_edge_id: int | None = None,
        snap: bool = True,
        check: bool = True,
    ):
        self._nodes = {int(k): _frozen(v) for k, v in sorted(nodes.items())}
        if dim is None:
            dim = len(next(iter(self._nodes.values()))) if self._nodes else 2
        self.dim = int(dim)
        built = {}
        for e in edges:
            if not isinstance(e, Edge):
                e = Edge(int(e[0]), int(e[1]), int(e[2]), e[3])
            curve = np.array(e.curve, dtype=float)
            if snap and e.u in self._nodes and e.v in self._nodes and curve.ndim == 2 and len(curve):
                curve[0] = self._nodes[e.u]
                curve[-1] = self._nodes[e.v]
            if e.id in built:
                raise ValueError(f"duplicate edge id {e.id}")
            built[e.id] = Edge(e.id, e.u, e.v, _frozen(curve))
        self._edges = dict(sorted(built.items()))
        self.next_node_id = max(
            next_node_id or 0, max(self._nodes, default=-1) + 1
        )
        self.next_edge_id = max(
            next_edge_id or 0, max(self._edges, default=-1) + 1
        )
        self._incident: dict[int, list[int]] | None = None
        if check:
            problems = validate(self)
            if problems:
                raise ValueError("invalid shape graph: " + "; ".join(problems))

    # -- read access ---------------------------------------------------
    @property
    def nodes(self) -> Mapping[int, np.ndarray]:
        return self._nodes

    @property
    def edges(self) -> list[Edge]:
        return list(self._edges.values())

    def edge(self, eid: int) -> Edge:
        return self._edges[eid]

    @property
    def node_ids(self) -> list[int]:
        return list(self._nodes)

    @property
    def edge_ids(self) -> list[int]:
        return list(self._edges)

    @property
    def n_nodes(self) -> int:
        return len(self._nodes)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    def incident(self, node: int) -> list[int]:
        """Ids of edges touching ``node``."""
        if self._incident is None:
            inc: dict[int, list[int]] = {n: [] for n in self._nodes}
            for e in self._edges.values():
                inc.setdefault(e.u, []).append(e.id)
                if e.v != e.u:
                    inc.setdefault(e.v, []).append(e.id)
            self._incident = inc
        return self._incident.get(node, [])

    def degree(self, node: int) -> int:
        """Multigraph degree: parallel edges count separately."""
        return sum(2 if self._edges[e].u == self._edges[e].v else 1 for e in self.incident(node))

    def degrees(self) -> dict[int, int]:
        return {n: self.degree(n) for n in self._nodes}

    def edit(self) -> "GraphEditor":
        return GraphEditor(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ShapeGraph):
            return NotImplemented
        if self.dim != other.dim or self._nodes.keys() != other._nodes.keys():
            return False
        if self._edges.keys() != other._edges.keys():
            return False
        for k, p in self._nodes.items():
            if not np.array_equal(p, other._nodes[k]):
                return False
        for k, e in self._edges.items():
            o = other._edges[k]
            if (e.u, e.v) != (o.u, o.v) or not np.array_equal(e.curve, o.curve):
                return False
        return True

    __hash__ = None

    def __repr__(self) -> str:
        return f"ShapeGraph(dim={self.dim}, nodes={self.n_nodes}, edges={self.n_edges})"


class GraphEditor:
    """Mutable scratch copy of a graph used inside multi-step operations."""

    def __init__(self, g: ShapeGraph):
        self.dim = g.dim
        self.nodes: dict[int, np.ndarray] = dict(g.nodes)
        self.edges: dict[int, Edge] = {e.id: e for e in g.edges}
        self.next_node_id = g.next_node_id
        self.next_edge_id = g.next_edge_id
        self.inc: dict[int, set[int]] = {n: set() for n in self.nodes}
        for e in self.edges.values():
            self.inc[e.u].add(e.id)
            self.inc[e.v].add(e.id)

    @classmethod
    def blank_like(cls, g: ShapeGraph) -> "GraphEditor":
        """Empty editor sharing ``g``'s dimension and id counters."""
        ed = cls(ShapeGraph({}, dim=g.dim, check=False))
        ed.next_node_id = g.next_node_id
        ed.next_edge_id = g.next_edge_id
        return ed

    def put_node(self, nid: int, pos) -> None:
        """Insert a node under an existing id."""
        self.nodes[nid] = _frozen(pos)
        self.inc.setdefault(nid, set())

    def put_edge(self, e: Edge) -> None:
        """Insert an existing edge verbatim (endpoints must be present)."""
        self.edges[e.id] = e
        self.inc[e.u].add(e.id)
        self.inc[e.v].add(e.id)

    def add_node(self, pos) -> int:
        nid = self.next_node_id
        self.next_node_id += 1
        self.nodes[nid] = _frozen(pos)
        self.inc[nid] = set()
        return nid

    def add_edge(self, u: int, v: int, curve) -> int | None:
        """Add an edge; self-loops are dropped and return ``None``."""
        if u == v:
            log.debug("dropping self-loop at node %d", u)
            return None
        curve = np.array(curve, dtype=float)
        curve[0] = self.nodes[u]
        curve[-1] = self.nodes[v]
        eid = self.next_edge_id
        self.next_edge_id += 1
        self.edges[eid] = Edge(eid, u, v, _frozen(curve))
        self.inc[u].add(eid)
        self.inc[v].add(eid)
        return eid

    def remove_edge(self, eid: int) -> Edge:
        e = self.edges.pop(eid)
        self.inc[e.u].discard(eid)
        self.inc[e.v].discard(eid)
        return e

    def remove_node(self, nid: int) -> None:
        for eid in list(self.inc[nid]):
            self.remove_edge(eid)
        del self.inc[nid]
        del self.nodes[nid]

    def degree(self, nid: int) -> int:
        return len(self.inc[nid])

    def neighbors(self, nid: int) -> set[int]:
        return {self.edges[e].other(nid) for e in self.inc[nid]}

    def adjacent(self, a: int, b: int) -> bool:
        return any(self.edges[e].other(a) == b for e in self.inc[a])

    def components(self) -> list[set[int]]:
        return _components(self.nodes, self.edges.values())

    def freeze(self) -> ShapeGraph:
        return ShapeGraph(
            self.nodes,
            self.edges.values(),
            dim=self.dim,
            next_node_id=self.next_node_id,
            next_edge_id=self.next_edge_id,
            check=False,
        )


def _components(nodes: Iterable[int], edges: Iterable[Edge]) -> list[set[int]]:
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        ru, rv = find(e.u), find(e.v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups: dict[int, set[int]] = {}
    for n in parent:
        groups.setdefault(find(n), set()).add(n)
    return sorted(groups.values(), key=min)


def connected_components(g: ShapeGraph) -> list[set[int]]:
    """Node-id sets of the connected components, ordered by smallest id."""
    return _components(g.nodes, g.edges)


def is_connected(g: ShapeGraph) -> bool:
    return len(connected_components(g)) == 1


# ---------------------------------------------------------------------------
# degree-two elision
# ---------------------------------------------------------------------------

def elide_degree_two(g: ShapeGraph, candidates: Iterable[int] | None = None) -> ShapeGraph:
    """Remove degree-two nodes by concatenating their two edges.

    A node is kept when its two neighbors are already adjacent (the triangle
    case) or when both edges lead to the same neighbor, since concatenation
    would close a loop. Runs to a fixed point. ``candidates`` restricts which
    nodes may be elided.
    """
    ed = g.edit()
    _elide(ed, candidates)
    return ed.freeze()


def _elide(ed: GraphEditor, candidates: Iterable[int] | None = None) -> tuple[list[int], dict[int, int]]:
    """Elide in place; returns removed node ids and ``old edge -> new edge``."""
    pool = sorted(ed.nodes if candidates is None else set(candidates))
    removed: list[int] = []
    replaced: dict[int, int] = {}
    changed = True
    while changed:
        changed = False
        for n in pool:
            if n not in ed.nodes or ed.degree(n) != 2:
                continue
            e1, e2 = (ed.edges[i] for i in sorted(ed.inc[n]))
            a, c = e1.other(n), e2.other(n)
            if a == c or ed.adjacent(a, c):
                continue
            T = max(len(e1.curve), len(e2.curve))
            path = concatenate(e1.oriented_to(n), e2.oriented_from(n))
            ed.remove_node(n)
            new = ed.add_edge(a, c, resample_edge(path, T))
            replaced[e1.id] = replaced[e2.id] = new
            removed.append(n)
            changed = True
    return removed, replaced


def resolve(mapping: dict[int, int], key: int) -> int:
    """Follow a chain of replacements to its final id."""
    while key in mapping:
        key = mapping[key]
    return key


# ---------------------------------------------------------------------------
# component joining
# ---------------------------------------------------------------------------

def _point_table(ed: GraphEditor, members: set[int]):
    """Stack node positions and interior edge samples of a node set.

    Returns points plus a parallel list of ``("node", id)`` or
    ``("edge", id, k)`` tags.
    """
    pts, tags = [], []
    for n in sorted(members):
        pts.append(ed.nodes[n])
        tags.append(("node", n))
    n_nodes = len(pts)
    for eid in sorted(ed.edges):
        e = ed.edges[eid]
        if e.u in members:
            for k in range(1, len(e.curve) - 1):
                pts.append(e.curve[k])
                tags.append(("edge", eid, k))
    return np.array(pts), tags, n_nodes


def _ensure_node(ed: GraphEditor, tag) -> int:
    if tag[0] == "node":
        return tag[1]
    _, eid, k = tag
    e = ed.remove_edge(eid)
    T = len(e.curve)
    nid = ed.add_node(e.curve[k])
    ed.add_edge(e.u, nid, resample_edge(e.curve[: k + 1], T))
    ed.add_edge(nid, e.v, resample_edge(e.curve[k:], T))
    return nid


def _closest_pair(ed: GraphEditor, comp: set[int], rest: set[int]):
    P, p_tags, p_nodes = _point_table(ed, comp)
    Q, q_tags, q_nodes = _point_table(ed, rest)
    best = (np.inf, None, None)
    d, idx = cKDTree(Q).query(P[:p_nodes])
    i = int(np.argmin(d))
    best = (float(d[i]), p_tags[i], q_tags[int(idx[i])])
    d, idx = cKDTree(P).query(Q[:q_nodes])
    i = int(np.argmin(d))
    if d[i] < best[0]:
        best = (float(d[i]), p_tags[int(idx[i])], q_tags[i])
    return best


def join_components(g: ShapeGraph, T: int | None = None) -> ShapeGraph:
    """Connect a disconnected graph by repeated closest-point bridging.

    The component holding the smallest node id is joined to the rest at the
    closest point pair where at least one side is a node. A mid-edge point is
    promoted to a node by splitting its edge at that sample. The bridge shape
    is the elastic mean of the edges incident to its two endpoints, fit to
    them; with no incident edges the bridge is straight.
    """
    if g.n_nodes == 0:
        raise ValueError("empty graph")
    ed = g.edit()
    if T is None:
        T = max((len(e.curve) for e in g.edges), default=30)
    while True:
        comps = ed.components()
        if len(comps) == 1:
            break
        comp = comps[0]
        rest = set().union(*comps[1:])
        dist, p_tag, q_tag = _closest_pair(ed, comp, rest)
        p = _ensure_node(ed, p_tag)
        q = _ensure_node(ed, q_tag)
        if dist == 0.0:
            _merge_nodes(ed, keep=p, drop=q)
            log.info("joined components by merging coincident nodes %d and %d", p, q)
            continue
        shapes = [ed.edges[e].oriented_from(p) for e in sorted(ed.inc[p])]
        shapes += [ed.edges[e].oriented_to(q) for e in sorted(ed.inc[q])]
        a, b = ed.nodes[p], ed.nodes[q]
        if shapes:
            curve = mean_edge(shapes, a, b, T)
        else:
            curve = np.linspace(0.0, 1.0, T)[:, None] * (b - a) + a
        ed.add_edge(p, q, curve)
        log.info("bridged components at nodes %d-%d (gap %.4g)", p, q, dist)
    return ed.freeze()


def _merge_nodes(ed: GraphEditor, keep: int, drop: int) -> None:
    for eid in sorted(ed.inc[drop]):
        e = ed.remove_edge(eid)
        u = keep if e.u == drop else e.u
        v = keep if e.v == drop else e.v
        ed.add_edge(u, v, e.curve)
    del ed.inc[drop]
    del ed.nodes[drop]


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate(g: ShapeGraph) -> list[str]:
    """List every invariant violation; an empty list means valid."""
    problems = []
    if g.dim not in (2, 3):
        problems.append(f"dimension {g.dim} not in (2, 3)")
    for nid, p in g.nodes.items():
        if p.shape != (g.dim,):
            problems.append(f"node {nid}: coordinates have shape {p.shape}")
        elif not np.all(np.isfinite(p)):
            problems.append(f"node {nid}: non-finite coordinates")
    for e in g.edges:
        c = e.curve
        if e.u == e.v:
            problems.append(f"edge {e.id}: self-loop at node {e.u}")
        missing = [n for n in (e.u, e.v) if n not in g.nodes]
        for n in missing:
            problems.append(f"edge {e.id}: references missing node {n}")
        if c.ndim != 2 or c.shape[0] < 2 or c.shape[1] != g.dim:
            problems.append(f"edge {e.id}: curve has shape {c.shape}")
            continue
        if not np.all(np.isfinite(c)):
            problems.append(f"edge {e.id}: non-finite curve samples")
        if missing:
            continue
        if not np.array_equal(c[0], g.nodes[e.u]):
            problems.append(f"edge {e.id}: curve start does not match node {e.u}")
        if not np.array_equal(c[-1], g.nodes[e.v]):
            problems.append(f"edge {e.id}: curve end does not match node {e.v}")
    return problems


def straight_edge(a, b, T: int = 30) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a + np.linspace(0.0, 1.0, T)[:, None] * (b - a)


def from_adjacency(positions: Mapping[int, Iterable[float]], pairs, T: int = 30) -> ShapeGraph:
    """Build a graph of straight edges from node positions and ``(u, v)`` pairs."""
    edges = [
        (i, u, v, straight_edge(positions[u], positions[v], T))
        for i, (u, v) in enumerate(pairs)
    ]
    return ShapeGraph(positions, edges)
