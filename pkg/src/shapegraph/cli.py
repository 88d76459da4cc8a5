"""Command-line pipeline: connect, reduce, features, classify, render.

Exit status is 0 on success, 1 for usage errors and 2 for data errors.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .classifier import GridSpec, cross_validate, parse_scheme
from .curves import DEFAULT_T
from .features import feature_names, graph_features
from .formats import (
    FormatError,
    atomic_write,
    dumps_accuracy,
    dumps_features,
    dumps_summary,
    read_document,
    read_features,
    read_labels,
    write_graph,
)
from .graph import is_connected, join_components
from .reduction import ReductionParams, multires
from .render import origin_colors, render_panels, render_svg

log = logging.getLogger("shapegraph")

USAGE_ERROR = 1
DATA_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _input(path: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"no such file: {path}")
    return p


def cmd_connect(args) -> int:
    g, meta = read_document(_input(args.input), args.T)
    out = join_components(g, args.T) if g.n_nodes and not is_connected(g) else g
    meta = dict(meta, source=Path(args.input).name)
    write_graph(out, args.output, meta)
    log.info("wrote %s (%d nodes, %d edges)", args.output, out.n_nodes, out.n_edges)
    return 0


def _level_name(rho: float, suffix: str = "") -> str:
    return f"g_{rho:.3f}{suffix}.json"


def cmd_reduce(args) -> int:
    g, _ = read_document(_input(args.input), args.T)
    if not is_connected(g):
        raise FormatError(f"{args.input}: graph is disconnected; run 'connect' first")
    try:
        params = ReductionParams(args.theta_tag, args.theta_til, args.phi_til, args.resolutions)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = multires(g, params)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    shared = {
        "source": Path(args.input).name,
        "params": {
            "theta_tag": params.theta_tag,
            "theta_til": params.theta_til,
            "phi_til": params.phi_til,
            "resolutions": list(params.resolutions),
        },
    }
    for lv in result.levels:
        meta = dict(shared, resolution=lv.resolution)
        meta["provenance"] = [rec.to_json() for rec in lv.records]
        meta["targets"] = {"edges": lv.edge_target, "nodes": lv.node_target}
        write_graph(lv.graph, out / _level_name(lv.resolution), meta)
        if args.emit_intermediates and lv.edge_stage is not None:
            write_graph(lv.edge_stage, out / _level_name(lv.resolution, "_edge"), dict(shared, resolution=lv.resolution, stage="edge"))
            write_graph(lv.node_stage, out / _level_name(lv.resolution, "_node"), dict(shared, resolution=lv.resolution, stage="node"))
        log.info("rho=%.3f: %d nodes, %d edges", lv.resolution, lv.graph.n_nodes, lv.graph.n_edges)
    return 0


def cmd_features(args) -> int:
    paths = sorted(set(glob.glob(args.pattern)))
    if not paths:
        raise FileNotFoundError(f"no files match {args.pattern!r}")
    labels = read_labels(_input(args.labels)) if args.labels else {}

    def one(p):
        return graph_features(read_document(p, args.T)[0], args.mode)

    with ThreadPoolExecutor(args.jobs) as pool:
        vectors = list(pool.map(one, paths))
    rows = []
    for p, fv in zip(paths, vectors):
        gid = Path(p).stem
        if fv.degenerate:
            log.warning("%s: degenerate statistics on edges %s", gid, list(fv.flagged_edges))
        rows.append((gid, labels.get(gid), fv.values))
    atomic_write(args.output, dumps_features(rows, feature_names(args.mode)))
    return 0


def _grid(spec: str) -> GridSpec:
    if spec == "default":
        return GridSpec.default()
    p = _input(spec)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
        return GridSpec(tuple(map(float, doc["h"])), tuple(map(float, doc["eta"])))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{spec}: bad grid file ({exc})") from None


def cmd_classify(args) -> int:
    try:
        parse_scheme(args.scheme)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ids, labels, X, _ = read_features(_input(args.features))
    if any(lab == "" for lab in labels):
        raise FormatError(f"{args.features}: every row needs a label")
    grid = _grid(args.grid)
    res = cross_validate(X, labels, args.scheme, grid, args.seed, n_jobs=args.jobs)
    extra = {"n_samples": len(ids), "n_features": int(X.shape[1]), "grid_size": grid.size}
    atomic_write(args.out, dumps_summary(res, extra))
    if args.table:
        atomic_write(args.table, dumps_accuracy(res))
    print(f"average={res.average:.4f} max={res.max:.4f} std={res.std:.4f}")
    return 0


def _origin(meta: dict) -> dict[int, int]:
    out = {}
    for rec in meta.get("provenance", []):
        out.update({int(k): int(v) for k, v in rec.get("origin", {}).items()})
    return out


def cmd_render(args) -> int:
    src = _input(args.input)
    if src.is_dir():
        files = sorted(src.glob("g_*.json"), key=lambda p: p.name)
        files = [p for p in files if not p.stem.endswith(("_edge", "_node"))]
        if not files:
            raise FileNotFoundError(f"{src}: no g_*.json levels found")
        panels = []
        for p in sorted(files, key=lambda p: -float(p.stem[2:])):
            g, meta = read_document(p, args.T)
            ec, nc = origin_colors(g, _origin(meta)) if args.color_clusters else ({}, {})
            panels.append((g, p.stem, ec, nc))
        svg = render_panels(panels)
    else:
        g, meta = read_document(src, args.T)
        if args.color_clusters and meta.get("provenance"):
            svg = render_panels([(g, "", *origin_colors(g, _origin(meta)))])
        else:
            svg = render_svg(g, color_clusters=args.color_clusters)
    atomic_write(args.output, svg)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="shapegraph", description="Shape graph reduction and classification.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    p.add_argument("-T", "--T", type=int, default=DEFAULT_T, help="samples per edge when reading")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("connect", help="join the components of a graph")
    c.add_argument("input")
    c.add_argument("output")
    c.set_defaults(func=cmd_connect)

    r = sub.add_parser("reduce", help="trim and build the resolution ladder")
    r.add_argument("input")
    r.add_argument("outdir")
    r.add_argument("--resolutions", type=_floats, default=(0.8, 0.6, 0.4))
    r.add_argument("--theta-tag", type=float, default=0.25)
    r.add_argument("--theta-til", type=float, default=50.0)
    r.add_argument("--phi-til", type=float, default=1.0)
    r.add_argument("--emit-intermediates", action="store_true")
    r.set_defaults(func=cmd_reduce)

    f = sub.add_parser("features", help="feature table for graphs matching a glob")
    f.add_argument("pattern")
    f.add_argument("output")
    f.add_argument("--mode", choices=("37", "17"), default="37")
    f.add_argument("--labels", help="CSV of id,label")
    f.add_argument("--jobs", type=int, default=None)
    f.set_defaults(func=cmd_features)

    k = sub.add_parser("classify", help="grid-searched cross-validated SVM accuracy")
    k.add_argument("features")
    k.add_argument("--scheme", default="loo", help="loo or kfold:K")
    k.add_argument("--grid", default="default", help="'default' or a JSON file with h and eta lists")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--out", default="summary.json")
    k.add_argument("--table", help="also write the per-cell accuracy CSV here")
    k.add_argument("--jobs", type=int, default=None)
    k.set_defaults(func=cmd_classify)

    v = sub.add_parser("render", help="SVG of a graph or of a reduce output directory")
    v.add_argument("input")
    v.add_argument("output")
    v.add_argument("--color-clusters", action="store_true")
    v.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return USAGE_ERROR
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"shapegraph: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (FileNotFoundError, IsADirectoryError, ValueError, OSError) as exc:
        print(f"shapegraph: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
