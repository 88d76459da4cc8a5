"""Random shape graphs for tests, demos and benchmarks.

``vessel_tree`` grows a planar branching network with bent edges and a few
loops, loosely resembling a retinal vessel skeleton. ``random_tree`` builds
plain trees whose branching density is a parameter.
"""

from __future__ import annotations

import numpy as np

from .curves import DEFAULT_T
from .graph import Edge, ShapeGraph, straight_edge


def bent_edge(a, b, bend: float, T: int = DEFAULT_T, waves: int = 1) -> np.ndarray:
    """Curve from ``a`` to ``b`` displaced sideways by ``bend * chord``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    t = np.linspace(0.0, 1.0, T)
    chord = b - a
    normal = np.zeros_like(chord)
    normal[0], normal[1] = -chord[1], chord[0]
    curve = a + t[:, None] * chord + (bend * np.sin(np.pi * waves * t))[:, None] * normal
    curve[0], curve[-1] = a, b
    return curve


def vessel_tree(
    n_nodes: int = 300,
    *,
    loops: int = 5,
    seed: int | None = 0,
    T: int = DEFAULT_T,
) -> ShapeGraph:
    """Branching planar network with about ``n_nodes`` nodes.

    Internal nodes bifurcate (degree three), edges shrink with depth, and
    ``loops`` extra edges join nearby leaves to create cycles.
    """
    rng = np.random.default_rng(seed)
    pos = {0: np.zeros(2)}
    pairs = []
    # frontier entries: (node, heading, segment length)
    frontier = [(0, np.pi / 2, 10.0)]
    first = True
    while frontier and len(pos) < n_nodes:
        i = int(rng.integers(len(frontier)))
        node, heading, length = frontier.pop(i)
        children = 1 if first else 2
        first = False
        for k in range(children):
            spread = rng.uniform(0.3, 0.8) * (1 if k else -1) if children == 2 else 0.0
            h = heading + spread + rng.normal(0.0, 0.1)
            ell = length * rng.uniform(0.6, 1.0)
            nid = len(pos)
            pos[nid] = pos[node] + ell * np.array([np.cos(h), np.sin(h)])
            pairs.append((node, nid))
            frontier.append((nid, h, max(ell * 0.9, 1.0)))
    deg = np.zeros(len(pos), dtype=int)
    for u, v in pairs:
        deg[u] += 1
        deg[v] += 1
    leaves = np.flatnonzero(deg == 1)[1:]
    if loops and len(leaves) > 2:
        P = np.array([pos[n] for n in leaves])
        used = set()
        for _ in range(loops):
            a = int(rng.choice(leaves))
            if a in used:
                continue
            d = np.linalg.norm(P - pos[a], axis=1)
            for j in np.argsort(d)[1:]:
                b = int(leaves[j])
                if b not in used and b != a:
                    pairs.append((a, b))
                    used.update((a, b))
                    break
    edges = []
    for eid, (u, v) in enumerate(pairs):
        bend = rng.uniform(-0.15, 0.15)
        edges.append(Edge(eid, u, v, bent_edge(pos[u], pos[v], bend, T, waves=int(rng.integers(1, 3)))))
    return ShapeGraph(pos, edges)


def random_tree(
    n_nodes: int,
    *,
    branching: float = 0.5,
    dim: int = 2,
    seed: int | None = 0,
    T: int = DEFAULT_T,
    bend: float = 0.1,
) -> ShapeGraph:
    """Random geometric tree.

    Each new node attaches to an existing node chosen preferentially among
    recently added ones (probability ``1 - branching``) or uniformly
    (``branching``). High ``branching`` gives bushy trees with many
    junctions; low values give long sparse chains.
    """
    rng = np.random.default_rng(seed)
    pos = {0: np.zeros(dim)}
    pairs = []
    for nid in range(1, n_nodes):
        if rng.random() < branching:
            parent = int(rng.integers(nid))
        else:
            parent = nid - 1
        step = rng.normal(size=dim)
        step /= np.linalg.norm(step)
        pos[nid] = pos[parent] + rng.uniform(0.5, 1.5) * step
        pairs.append((parent, nid))
    edges = []
    for eid, (u, v) in enumerate(pairs):
        if dim == 2:
            curve = bent_edge(pos[u], pos[v], rng.uniform(-bend, bend), T)
        else:
            curve = straight_edge(pos[u], pos[v], T)
            curve[1:-1] += rng.normal(scale=bend * 0.1, size=(T - 2, dim))
        edges.append(Edge(eid, u, v, curve))
    return ShapeGraph(pos, edges)
