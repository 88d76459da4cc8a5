"""Polyline primitives shared by every stage.

An edge curve is stored as a ``(T, d)`` float array of ordered sample points,
with the implied parameterization ``t_k = k / (T - 1)``.
"""

from __future__ import annotations

import numpy as np

DEFAULT_T = 30


def as_curve(points) -> np.ndarray:
    """Coerce ``points`` to a float ``(T, d)`` array and check it."""
    arr = np.array(points, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ValueError(f"curve needs shape (T>=2, d), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("curve has non-finite coordinates")
    return arr


def segment_lengths(curve: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.diff(curve, axis=0), axis=1)


def edge_length(curve: np.ndarray) -> float:
    """Sum of Euclidean lengths of consecutive segments."""
    return float(segment_lengths(np.asarray(curve, dtype=float)).sum())


def resample_edge(curve: np.ndarray, T: int = DEFAULT_T) -> np.ndarray:
    """Resample a polyline to ``T`` points equally spaced in arc length.

    Endpoints are copied exactly. A curve of zero total length comes back as
    ``T`` copies of its single location.
    """
    curve = np.asarray(curve, dtype=float)
    if T < 2:
        raise ValueError("T must be at least 2")
    if curve.shape[0] < 2:
        raise ValueError("curve needs at least 2 points")
    seg = segment_lengths(curve)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if total <= 0.0:
        out = np.repeat(curve[:1], T, axis=0)
        # lengths can underflow to zero between distinct points
        out[-1] = curve[-1]
        return out
    targets = np.linspace(0.0, total, T)
    # drop zero-length segments so the arc-length table is strictly increasing
    keep = np.concatenate([[True], seg > 0])
    cum_k, pts_k = cum[keep], curve[keep]
    out = np.empty((T, curve.shape[1]))
    for k in range(curve.shape[1]):
        out[:, k] = np.interp(targets, cum_k, pts_k[:, k])
    out[0] = curve[0]
    out[-1] = curve[-1]
    return out


def is_degenerate(curve: np.ndarray) -> bool:
    return edge_length(curve) <= 0.0


def concatenate(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Join two polylines where ``first[-1]`` coincides with ``second[0]``."""
    return np.vstack([first, second[1:]])
