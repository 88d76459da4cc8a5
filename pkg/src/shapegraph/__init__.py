"""Shape graphs: spatial graphs whose edges are curves.

Elastic edge shapes, graph reduction at several resolutions, descriptive
features and an SVM classifier.
"""

from __future__ import annotations

from .classifier import GridSpec, SvmModel, cross_validate, predict, train
from .curves import DEFAULT_T, edge_length, resample_edge
from .elastic import karcher_mean, mean_edge, shape_distance, to_srvf
from .features import FEATURE_NAMES, FeatureVector, graph_features
from .formats import parse_swc, read_graph, write_graph
from .graph import Edge, ShapeGraph, connected_components, elide_degree_two, join_components
from .metrics import avg_curvature, chamfer, effective_resistance, tortuosity
from .reduction import (
    MultiResResult,
    ReductionParams,
    multires,
    reduce_edges,
    reduce_nodes,
    trim,
    trim_short_terminals,
    trim_similar_terminals,
)
from .render import render_svg

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_T",
    "Edge",
    "FEATURE_NAMES",
    "FeatureVector",
    "GridSpec",
    "MultiResResult",
    "ReductionParams",
    "ShapeGraph",
    "SvmModel",
    "avg_curvature",
    "chamfer",
    "connected_components",
    "cross_validate",
    "edge_length",
    "effective_resistance",
    "elide_degree_two",
    "graph_features",
    "join_components",
    "karcher_mean",
    "mean_edge",
    "multires",
    "parse_swc",
    "predict",
    "read_graph",
    "reduce_edges",
    "reduce_nodes",
    "render_svg",
    "resample_edge",
    "shape_distance",
    "to_srvf",
    "tortuosity",
    "train",
    "trim",
    "trim_short_terminals",
    "trim_similar_terminals",
    "write_graph",
]
