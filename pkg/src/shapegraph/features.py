"""Fixed-length descriptors of a shape graph for classification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import edge_length
from .graph import ShapeGraph
from .metrics import curvature_stats, tortuosity_stats

PERCENTILES = (0, 5, 10, 25, 50, 75, 90, 95, 100)


def _block(stat: str, label: str) -> list[str]:
    return [f"{stat}_p{p}" for p in PERCENTILES] + [f"{label}"]


FEATURE_NAMES: tuple[str, ...] = tuple(
    [
        "n_nodes",
        "n_deg1",
        "n_deg2",
        "n_deg3",
        "n_deg4plus",
        "n_edges",
        "total_length",
    ]
    + _block("length", "mean_length")
    + _block("curvature", "mean_curvature")
    + _block("tortuosity", "mean_tortuosity")
)
assert len(FEATURE_NAMES) == 37

MODES = {"37": 37, "full37": 37, "17": 17, "reduced17": 17}


def feature_names(mode: str = "37") -> tuple[str, ...]:
    return FEATURE_NAMES[: _width(mode)]


def _width(mode) -> int:
    try:
        return MODES[str(mode)]
    except KeyError:
        raise ValueError(f"unknown feature mode {mode!r}; use 37 or 17") from None


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    mode: str
    degenerate: bool = False
    # edges whose curvature or tortuosity hit a degenerate case
    flagged_edges: tuple[int, ...] = field(default=())

    @property
    def names(self) -> tuple[str, ...]:
        return feature_names(self.mode)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, map(float, self.values)))


def _summary(x: np.ndarray) -> list[float]:
    return list(np.percentile(x, PERCENTILES)) + [float(x.mean())]


def graph_features(g: ShapeGraph, mode: str = "37") -> FeatureVector:
    """Counts, length, curvature and tortuosity statistics of ``g``.

    Degrees are multigraph degrees, percentiles use linear interpolation and
    the mean curvature/tortuosity are unweighted means over edges. A graph
    without edges gets zeros for every edge statistic and ``degenerate=True``.
    """
    width = _width(mode)
    mode = "full37" if width == 37 else "reduced17"
    if g.n_nodes == 0:
        raise ValueError("graph has no nodes")
    deg = np.array(list(g.degrees().values()))
    counts = [g.n_nodes, (deg == 1).sum(), (deg == 2).sum(), (deg == 3).sum(), (deg >= 4).sum(), g.n_edges]
    # isolated nodes fall in no degree bucket; only possible without edges
    if g.n_edges == 0:
        vals = np.zeros(37)
        vals[: len(counts)] = counts
        return FeatureVector(vals[:width], mode, True, ())
    lengths, curv, tort, flagged = [], [], [], []
    for e in g.edges:
        lengths.append(edge_length(e.curve))
        if width == 37:
            k, bad_k = curvature_stats(e.curve)
            t, bad_t = tortuosity_stats(e.curve)
            curv.append(k)
            tort.append(t)
            if bad_k or bad_t:
                flagged.append(e.id)
    lengths = np.array(lengths)
    vals = [float(c) for c in counts] + [float(lengths.sum())] + _summary(lengths)
    if width == 37:
        vals += _summary(np.array(curv)) + _summary(np.array(tort))
    return FeatureVector(np.array(vals), mode, bool(flagged), tuple(flagged))


def feature_matrix(graphs, mode: str = "37") -> np.ndarray:
    return np.vstack([graph_features(g, mode).values for g in graphs])
