"""Static SVG drawings of shape graphs and resolution ladders.

Edges are polylines, nodes are dots. Three-dimensional graphs are drawn as
three orthographic views (xy, xz, yz) side by side. Output depends only on
the input, so repeated renders are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .graph import ShapeGraph

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
)
UNASSIGNED = "#000000"
PROJECTIONS = ((0, 1), (0, 2), (1, 2))


@dataclass
class RenderOptions:
    panel: float = 320.0
    gap: float = 16.0
    margin: float = 0.05
    stroke: float = 1.2
    node_radius: float = 2.0
    edge_color: str = "#3a6ea5"
    node_color: str = "#c0392b"
    titles: bool = True


def _num(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".") if x != 0 else "0"


def _bounds(points: np.ndarray, margin: float):
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = hi - lo
    size = float(max(span.max(), 1e-12))
    pad = margin * size
    # square box centred on the data, so aspect ratio is preserved
    center = (lo + hi) / 2.0
    half = size / 2.0 + pad
    return center - half, 2.0 * half


def _panel(g: ShapeGraph, axes, x0, opts, edge_colors, node_colors, title) -> list[str]:
    pts = [g.nodes[n][list(axes)] for n in g.node_ids]
    pts += [e.curve[:, list(axes)] for e in g.edges]
    P = np.vstack(pts) if pts else np.zeros((1, 2))
    lo, size = _bounds(P, opts.margin)
    s = opts.panel / size

    def xy(p):
        # svg y grows downwards
        return x0 + (p[0] - lo[0]) * s, opts.panel - (p[1] - lo[1]) * s

    out = ['<g class="panel">']
    out.append(
        f'<rect x="{_num(x0)}" y="0" width="{_num(opts.panel)}" height="{_num(opts.panel)}" '
        'fill="none" stroke="#dddddd"/>'
    )
    if opts.titles and title:
        out.append(f'<text x="{_num(x0 + 4)}" y="14" font-size="11" fill="#444444">{escape(title)}</text>')
    for e in g.edges:
        coords = " ".join(f"{_num(a)},{_num(b)}" for a, b in map(xy, e.curve[:, list(axes)]))
        color = edge_colors.get(e.id, opts.edge_color)
        out.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" '
            f'stroke-width="{_num(opts.stroke)}"/>'
        )
    for n in g.node_ids:
        cx, cy = xy(g.nodes[n][list(axes)])
        color = node_colors.get(n, opts.node_color)
        out.append(f'<circle cx="{_num(cx)}" cy="{_num(cy)}" r="{_num(opts.node_radius)}" fill="{color}"/>')
    out.append("</g>")
    return out


def _views(g: ShapeGraph):
    if g.dim == 2:
        return [((0, 1), "")]
    if g.dim == 3:
        return [(ax, f"{'xyz'[ax[0]]}{'xyz'[ax[1]]}") for ax in PROJECTIONS]
    if g.dim == 1:
        raise ValueError("cannot render one-dimensional graphs")
    return [((0, 1), "x0x1")]


def cluster_colors(labels: dict[int, int]) -> dict[int, str]:
    """Palette colour per id for labels shared by several ids, black otherwise."""
    counts: dict[int, int] = {}
    for lab in labels.values():
        counts[lab] = counts.get(lab, 0) + 1
    shared = sorted(lab for lab, c in counts.items() if c > 1)
    slot = {lab: PALETTE[i % len(PALETTE)] for i, lab in enumerate(shared)}
    return {k: slot.get(lab, UNASSIGNED) for k, lab in labels.items()}


def origin_colors(g: ShapeGraph, origin: dict[int, int]) -> tuple[dict, dict]:
    """Edge and node colours: nodes built from a cluster get its colour."""
    nc = {n: PALETTE[origin[n] % len(PALETTE)] if n in origin else UNASSIGNED for n in g.node_ids}
    return {e: UNASSIGNED for e in g.edge_ids}, nc


def render_svg(
    obj,
    options: RenderOptions | None = None,
    *,
    edge_labels: dict[int, int] | None = None,
    node_labels: dict[int, int] | None = None,
    color_clusters: bool = False,
) -> str:
    """SVG text for a :class:`ShapeGraph` or a multi-resolution result.

    ``edge_labels`` / ``node_labels`` colour elements by cluster. With
    ``color_clusters`` and a ladder, output nodes built from a cluster are
    coloured by that cluster and every other element is black.
    """
    opts = options or RenderOptions()
    panels: list[tuple[ShapeGraph, str, dict, dict]] = []
    if isinstance(obj, ShapeGraph):
        ec = cluster_colors(edge_labels) if edge_labels else {}
        nc = cluster_colors(node_labels) if node_labels else {}
        if color_clusters and not (ec or nc):
            ec = {e: UNASSIGNED for e in obj.edge_ids}
        panels.append((obj, "", ec, nc))
    else:
        for lv in obj.levels:
            ec, nc = {}, {}
            if color_clusters:
                origin = {}
                for rec in lv.records:
                    origin.update(rec.origin)
                ec, nc = origin_colors(lv.graph, origin)
            panels.append((lv.graph, f"rho={lv.resolution:.3f}", ec, nc))
    return render_panels(panels, opts)


def render_panels(panels, options: RenderOptions | None = None) -> str:
    """Lay out ``(graph, title, edge_colors, node_colors)`` panels left to right."""
    opts = options or RenderOptions()
    row_views = [_views(g) for g, *_ in panels]
    n_cols = sum(len(v) for v in row_views)
    width = n_cols * opts.panel + max(n_cols - 1, 0) * opts.gap
    height = opts.panel
    body = []
    x0 = 0.0
    for (g, title, ec, nc), views in zip(panels, row_views):
        for axes, label in views:
            t = " ".join(p for p in (title, label) if p)
            body.extend(_panel(g, axes, x0, opts, ec, nc, t))
            x0 += opts.panel + opts.gap
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_num(width)}" height="{_num(height)}" viewBox="0 0 {_num(width)} {_num(height)}">'
    )
    return "\n".join([head, '<rect width="100%" height="100%" fill="#ffffff"/>', *body, "</svg>"]) + "\n"
