"""Reading and writing graphs, feature tables and accuracy tables.

Graph documents are JSON with sorted keys and ``repr`` floats, so a write
followed by a parse reproduces every coordinate bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curves import DEFAULT_T, resample_edge
from .graph import Edge, ShapeGraph, join_components

SCHEMA_VERSION = 1


class FormatError(ValueError):
    """Malformed or inconsistent input file."""


def atomic_write(path, data: str | bytes) -> None:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# SWC
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SwcRecord:
    index: int
    type_code: int
    x: float
    y: float
    z: float
    radius: float
    parent: int
    line: int = 0

    @property
    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def read_swc_records(text: str) -> list[SwcRecord]:
    records: list[SwcRecord] = []
    seen: dict[int, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        cols = line.split()
        if len(cols) < 7:
            raise FormatError(f"line {lineno}: expected 7 columns, got {len(cols)}")
        try:
            idx, code = int(cols[0]), int(float(cols[1]))
            x, y, z, r = (float(c) for c in cols[2:6])
            parent = int(cols[6])
        except ValueError:
            raise FormatError(f"line {lineno}: malformed record {raw.strip()!r}") from None
        if not all(np.isfinite((x, y, z))):
            raise FormatError(f"line {lineno}: non-finite coordinate")
        if idx in seen:
            raise FormatError(f"line {lineno}: duplicate index {idx} (first on line {seen[idx]})")
        seen[idx] = lineno
        records.append(SwcRecord(idx, code, x, y, z, r, parent, lineno))
    if not records:
        raise FormatError("no records")
    for rec in records:
        if rec.parent >= 0 and rec.parent not in seen:
            raise FormatError(f"line {rec.line}: parent {rec.parent} not defined")
        if rec.parent == rec.index:
            raise FormatError(f"line {rec.line}: sample is its own parent")
    return records


def parse_swc(text: str, T: int = DEFAULT_T) -> ShapeGraph:
    """Skeleton graph of an SWC morphology.

    Roots, terminals and branch points (two or more children) become nodes;
    each unbranched chain between them becomes an edge resampled to ``T``
    points. A forest is joined into one component.
    """
    return parse_swc_document(text, T)[0]


def parse_swc_document(text: str, T: int = DEFAULT_T) -> tuple[ShapeGraph, dict]:
    """Like :func:`parse_swc`, also returning the SWC index, type code and
    radius of every node under ``metadata["swc_nodes"]``."""
    records = read_swc_records(text)
    by_index = {r.index: r for r in records}
    children: dict[int, list[int]] = {r.index: [] for r in records}
    for r in records:
        if r.parent >= 0:
            children[r.parent].append(r.index)
    is_node = {
        r.index: r.parent < 0 or len(children[r.index]) != 1 for r in records
    }
    reached, stack = 0, [r.index for r in records if r.parent < 0]
    while stack:
        reached += 1
        stack.extend(children[stack.pop()])
    if reached != len(records):
        raise FormatError("parent references form a cycle")
    ids = {}
    for r in records:
        if is_node[r.index]:
            ids[r.index] = len(ids)
    nodes = {ids[i]: by_index[i].xyz for i in ids}
    edges = []
    for start in ids:
        for child in children[start]:
            pts = [by_index[start].xyz]
            cur = child
            while True:
                pts.append(by_index[cur].xyz)
                if is_node[cur]:
                    break
                cur = children[cur][0]
            curve = resample_edge(np.array(pts), T)
            edges.append(Edge(len(edges), ids[start], ids[cur], curve))
    g = ShapeGraph(nodes, edges, dim=3)
    if sum(1 for r in records if r.parent < 0) > 1:
        g = join_components(g, T)
    swc_nodes = {
        str(nid): {"index": i, "type": by_index[i].type_code, "radius": by_index[i].radius}
        for i, nid in ids.items()
    }
    return g, {"swc_nodes": swc_nodes}


# ---------------------------------------------------------------------------
# graph documents
# ---------------------------------------------------------------------------

def graph_to_dict(g: ShapeGraph, metadata: dict | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "dim": g.dim,
        "next_node_id": g.next_node_id,
        "next_edge_id": g.next_edge_id,
        "nodes": [{"id": n, "coords": [float(c) for c in g.nodes[n]]} for n in g.node_ids],
        "edges": [
            {"id": e.id, "u": e.u, "v": e.v, "points": e.curve.tolist()} for e in g.edges
        ],
        "metadata": metadata or {},
    }


def dumps_graph(g: ShapeGraph, metadata: dict | None = None) -> str:
    return json.dumps(graph_to_dict(g, metadata), sort_keys=True, allow_nan=False, indent=1) + "\n"


def write_graph(g: ShapeGraph, path, metadata: dict | None = None) -> None:
    atomic_write(path, dumps_graph(g, metadata))


def _generic(doc: dict) -> ShapeGraph:
    raw_nodes = doc.get("nodes")
    if isinstance(raw_nodes, dict):
        nodes = {int(k): v for k, v in raw_nodes.items()}
    elif isinstance(raw_nodes, list):
        nodes = {}
        for i, item in enumerate(raw_nodes):
            if isinstance(item, dict):
                nodes[int(item["id"])] = item.get("coords", item.get("pos"))
            else:
                nodes[i] = item
    else:
        raise FormatError("document has no node list")
    T = int(doc.get("T", DEFAULT_T))
    edges = []
    for i, item in enumerate(doc.get("edges", [])):
        if isinstance(item, dict):
            u, v = int(item["u"]), int(item["v"])
            pts = item.get("points")
            eid = int(item.get("id", i))
        else:
            u, v = int(item[0]), int(item[1])
            pts = item[2] if len(item) > 2 else None
            eid = i
        if u not in nodes or v not in nodes:
            raise FormatError(f"invalid shape graph: edge {eid} references a missing node")
        if pts is None:
            a, b = np.asarray(nodes[u], float), np.asarray(nodes[v], float)
            pts = a + np.linspace(0.0, 1.0, T)[:, None] * (b - a)
        edges.append(Edge(eid, u, v, np.asarray(pts, dtype=float)))
    return ShapeGraph(nodes, edges)


def graph_from_dict(doc: dict) -> ShapeGraph:
    if not isinstance(doc, dict):
        raise FormatError("graph document must be a JSON object")
    if "schema_version" not in doc:
        try:
            return _generic(doc)
        except (KeyError, TypeError, IndexError) as exc:
            raise FormatError(f"malformed node/edge list: {exc}") from None
    if doc["schema_version"] != SCHEMA_VERSION:
        raise FormatError(
            f"schema version {doc['schema_version']!r} not supported (expected {SCHEMA_VERSION})"
        )
    try:
        nodes = {int(n["id"]): n["coords"] for n in doc["nodes"]}
        ids = {int(n["id"]) for n in doc["nodes"]}
        edges = []
        for e in doc["edges"]:
            u, v = int(e["u"]), int(e["v"])
            if u not in ids or v not in ids:
                raise FormatError(f"invalid shape graph: edge {e['id']} references a missing node")
            edges.append(Edge(int(e["id"]), u, v, np.asarray(e["points"], dtype=float)))
        g = ShapeGraph(
            nodes,
            edges,
            dim=doc.get("dim"),
            next_node_id=doc.get("next_node_id"),
            next_edge_id=doc.get("next_edge_id"),
            snap=False,
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed graph document: missing or bad field {exc}") from None
    return g


def loads_graph(text: str) -> ShapeGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    return graph_from_dict(doc)


def read_document(path, T: int = DEFAULT_T) -> tuple[ShapeGraph, dict]:
    """Graph plus metadata from a JSON document or an ``.swc`` file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".swc":
        g, meta = parse_swc_document(text, T)
        return g, dict(meta, source=path.name)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    if isinstance(doc, dict) and "schema_version" not in doc:
        doc.setdefault("T", T)
    meta = doc.get("metadata", {}) if isinstance(doc, dict) else {}
    return graph_from_dict(doc), meta


def read_graph(path, T: int = DEFAULT_T) -> ShapeGraph:
    """Load a graph from a JSON document or an ``.swc`` file."""
    return read_document(path, T)[0]


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def dumps_features(rows, names) -> str:
    """CSV text with ``id,label`` and one column per feature name.

    ``rows`` holds ``(id, label, values)`` triples.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "label", *names])
    for gid, label, values in rows:
        w.writerow([gid, "" if label is None else label, *map(_fmt, values)])
    return buf.getvalue()


def read_features(path) -> tuple[list[str], list[str], np.ndarray, list[str]]:
    """Return ``(ids, labels, X, feature_names)`` from a features CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if header[:2] != ["id", "label"]:
            raise FormatError(f"{path}: header must start with id,label")
        ids, labels, rows = [], [], []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}: line {lineno}: expected {len(header)} columns")
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError:
                raise FormatError(f"{path}: line {lineno}: non-numeric feature") from None
            ids.append(row[0])
            labels.append(row[1])
    return ids, labels, np.array(rows).reshape(len(rows), len(header) - 2), header[2:]


def read_labels(path) -> dict[str, str]:
    """``id,label`` pairs from a CSV (a header row starting with ``id`` is skipped)."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and row[0].strip().lower() == "id":
                continue
            if len(row) < 2:
                raise FormatError(f"{path}: line {lineno}: expected id,label")
            out[row[0].strip()] = row[1].strip()
    return out


def dumps_accuracy(result) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "eta", "accuracy"])
    for h, eta, acc in result.rows():
        w.writerow([_fmt(h), _fmt(eta), _fmt(acc)])
    return buf.getvalue()


def dumps_summary(result, extra: dict | None = None) -> str:
    doc = dict(result.summary())
    h, eta = result.best()
    doc.update({"best_h": h, "best_eta": eta, "scheme": result.scheme, "seed": result.seed})
    doc.update(extra or {})
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


__all__ = [
    "FormatError",
    "SwcRecord",
    "read_swc_records",
    "parse_swc_document",
    "parse_swc",
    "graph_to_dict",
    "graph_from_dict",
    "dumps_graph",
    "loads_graph",
    "write_graph",
    "read_graph",
    "read_document",
    "dumps_features",
    "read_features",
    "read_labels",
    "dumps_accuracy",
    "dumps_summary",
    "atomic_write",
]
