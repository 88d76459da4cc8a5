"""Edge dissimilarities, node resistance distances and per-edge statistics."""

from __future__ import annotations

import numpy as np
from numba import njit

from .curves import edge_length
from .graph import ShapeGraph, connected_components

MIN_LENGTH = 1e-9
TORTUOSITY_CAP = 1e6
EIG_RTOL = 1e-10


def chamfer(e1: np.ndarray, e2: np.ndarray) -> float:
    """Symmetric mean nearest-sample distance between two sampled curves."""
    a = np.asarray(e1, dtype=float)
    b = np.asarray(e2, dtype=float)
    D = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return float(D.min(axis=1).mean() + D.min(axis=0).mean())


@njit(cache=True, nogil=True)
def _chamfer_matrix(P):
    m, T, d = P.shape
    out = np.zeros((m, m))
    row = np.empty(T)
    col = np.empty(T)
    for a in range(m):
        for b in range(a + 1, m):
            for i in range(T):
                row[i] = np.inf
                col[i] = np.inf
            for i in range(T):
                for j in range(T):
                    s = 0.0
                    for c in range(d):
                        diff = P[a, i, c] - P[b, j, c]
                        s += diff * diff
                    if s < row[i]:
                        row[i] = s
                    if s < col[j]:
                        col[j] = s
            acc_r = 0.0
            acc_c = 0.0
            for i in range(T):
                acc_r += np.sqrt(row[i])
                acc_c += np.sqrt(col[i])
            out[a, b] = out[b, a] = acc_r / T + acc_c / T
    return out


def chamfer_matrix(curves) -> np.ndarray:
    """Pairwise chamfer distances between sampled curves."""
    curves = [np.asarray(c, dtype=float) for c in curves]
    if not curves:
        return np.zeros((0, 0))
    if len({c.shape for c in curves}) == 1:
        return _chamfer_matrix(np.ascontiguousarray(np.stack(curves)))
    m = len(curves)
    out = np.zeros((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            out[a, b] = out[b, a] = chamfer(curves[a], curves[b])
    return out


def laplacian(g: ShapeGraph) -> np.ndarray:
    """Weighted Laplacian with weights ``1/length`` summed over parallel edges."""
    index = {n: i for i, n in enumerate(g.node_ids)}
    W = np.zeros((g.n_nodes, g.n_nodes))
    for e in g.edges:
        w = 1.0 / max(edge_length(e.curve), MIN_LENGTH)
        i, j = index[e.u], index[e.v]
        W[i, j] += w
        W[j, i] += w
    return np.diag(W.sum(axis=1)) - W


def effective_resistance(g: ShapeGraph) -> np.ndarray:
    """Resistance distances between all nodes, rows in ``g.node_ids`` order.

    Uses the Laplacian pseudoinverse from a symmetric eigendecomposition,
    discarding eigenvalues below ``1e-10 * max``.
    """
    if g.n_nodes == 0:
        return np.zeros((0, 0))
    if len(connected_components(g)) > 1:
        raise ValueError("resistance undefined on disconnected graph")
    Q = laplacian(g)
    lam, U = np.linalg.eigh(Q)
    keep = lam > EIG_RTOL * max(lam.max(), 0.0)
    Qp = (U[:, keep] / lam[keep]) @ U[:, keep].T
    diag = np.diag(Qp)
    R = diag[:, None] + diag[None, :] - 2.0 * Qp
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 0.0)
    return np.maximum(R, 0.0)


def _turning_angles(curve: np.ndarray) -> np.ndarray:
    seg = np.diff(curve, axis=0)
    seg = seg[np.linalg.norm(seg, axis=1) > 0]
    if len(seg) < 2:
        return np.zeros(0)
    a, b = seg[:-1], seg[1:]
    dot = np.einsum("ij,ij->i", a, b)
    if seg.shape[1] == 2:
        cross = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
    else:
        cross = np.linalg.norm(np.cross(a, b), axis=1)
    # atan2 stays accurate for nearly collinear segments, unlike arccos
    return np.arctan2(cross, dot)


def curvature_stats(curve: np.ndarray) -> tuple[float, bool]:
    """Average curvature and a degenerate flag (zero-length curve)."""
    curve = np.asarray(curve, dtype=float)
    ell = edge_length(curve)
    if ell <= 0.0:
        return 0.0, True
    # kappa_i = angle_i / mean adjacent segment length, integrated by the same
    # length, leaves the total turning angle
    return float(_turning_angles(curve).sum() / ell), False


def avg_curvature(curve: np.ndarray) -> float:
    """Mean curvature ``(1/length) * integral(kappa ds)`` of a polyline."""
    return curvature_stats(curve)[0]


def tortuosity_stats(curve: np.ndarray) -> tuple[float, bool]:
    """Tortuosity and a flag set when the endpoints coincide."""
    curve = np.asarray(curve, dtype=float)
    ell = edge_length(curve)
    chord = float(np.linalg.norm(curve[-1] - curve[0]))
    if chord < MIN_LENGTH:
        return min(ell / MIN_LENGTH, TORTUOSITY_CAP), True
    return ell / chord, False


def tortuosity(curve: np.ndarray) -> float:
    """Arc length over endpoint chord; capped at ``1e6`` for closed curves."""
    return tortuosity_stats(curve)[0]

