"""Square-root velocity functions, elastic distance and Karcher means.

Srvfs and reparameterizations are plain arrays on the uniform grid
``t_k = k / (T - 1)``: an srvf is ``(T, d)`` and a warping ``gamma`` is ``(T,)``.
All quadrature is trapezoidal.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit
from scipy.integrate import cumulative_trapezoid

from .curves import resample_edge

# (dt, dgamma) moves of the alignment lattice; (1, 1) first so ties keep identity
BASIC_STENCIL = np.array(
    [(1, 1), (1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2)], dtype=np.int64
)


def coprime_stencil(n: int) -> np.ndarray:
    """All moves ``(a, b)`` with ``1 <= a, b <= n`` and ``gcd(a, b) == 1``."""
    moves = [(1, 1)] + [
        (a, b)
        for a in range(1, n + 1)
        for b in range(1, n + 1)
        if (a, b) != (1, 1) and math.gcd(a, b) == 1
    ]
    return np.array(moves, dtype=np.int64)


# the 7-move set caps slope resolution too coarsely for smooth warps
DP_STENCIL = coprime_stencil(6)

KARCHER_MAX_ITER = 30
KARCHER_TOL = 1e-6


def _grid(T: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, T)


def l2_norm(q: np.ndarray) -> float:
    q = np.asarray(q, dtype=float)
    sq = np.sum(q * q, axis=1)
    return float(np.sqrt(np.trapezoid(sq, dx=1.0 / (len(q) - 1))))


def to_srvf(curve: np.ndarray) -> np.ndarray:
    """``q = beta' / sqrt(|beta'|)`` from finite differences.

    The velocity direction is the central difference; its magnitude is the
    mean speed of the two adjacent polyline segments, which makes
    ``||q||^2`` equal the polyline length exactly under trapezoidal
    quadrature. Samples where the velocity vanishes map to the zero vector.
    """
    curve = np.asarray(curve, dtype=float)
    T = curve.shape[0]
    h = 1.0 / (T - 1)
    seg = np.diff(curve, axis=0) / h
    seg_speed = np.linalg.norm(seg, axis=1)
    speed = np.empty(T)
    speed[0], speed[-1] = seg_speed[0], seg_speed[-1]
    speed[1:-1] = 0.5 * (seg_speed[:-1] + seg_speed[1:])
    direction = np.gradient(curve, h, axis=0)
    norm = np.linalg.norm(direction, axis=1)
    # hairpins cancel the central difference; borrow a segment direction
    flat = norm == 0
    if flat.any():
        fwd = np.vstack([seg, seg[-1:]])
        bwd = np.vstack([seg[:1], seg])
        pick = np.where((np.linalg.norm(fwd, axis=1) > 0)[:, None], fwd, bwd)
        direction[flat] = pick[flat]
        norm = np.linalg.norm(direction, axis=1)
    q = np.zeros_like(curve)
    nz = (norm > 0) & (speed > 0)
    q[nz] = direction[nz] / norm[nz, None] * np.sqrt(speed[nz])[:, None]
    return q


def from_srvf(q: np.ndarray) -> np.ndarray:
    """Integrate ``q |q|`` from the origin; inverse of :func:`to_srvf` up to translation."""
    q = np.asarray(q, dtype=float)
    vel = q * np.linalg.norm(q, axis=1)[:, None]
    return cumulative_trapezoid(vel, dx=1.0 / (len(q) - 1), axis=0, initial=0.0)


def apply_reparam(q: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Action of a warping on an srvf: ``q(gamma(t)) * sqrt(gamma'(t))``."""
    q = np.asarray(q, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    T = len(q)
    t = _grid(T)
    dgamma = np.clip(np.gradient(gamma, 1.0 / (T - 1)), 0.0, None)
    warped = np.column_stack([np.interp(gamma, t, q[:, k]) for k in range(q.shape[1])])
    return warped * np.sqrt(dgamma)[:, None]


@njit(cache=True, nogil=True)
def _segment_cost(q1, q2, k, l, i, j, T):
    # trapezoid of |q1(t) - sqrt(m) q2(g0 + m (t - t0))|^2 on max(di, dj) + 1 nodes
    di = i - k
    dj = j - l
    slope = dj / di
    root = np.sqrt(slope)
    n = max(di, dj) + 1
    d = q1.shape[1]
    total = 0.0
    for s in range(n):
        x1 = k + di * s / (n - 1)
        x2 = l + dj * s / (n - 1)
        a1 = min(int(x1), T - 2)
        f1 = x1 - a1
        a2 = min(int(x2), T - 2)
        f2 = x2 - a2
        val = 0.0
        for c in range(d):
            u = (1.0 - f1) * q1[a1, c] + f1 * q1[a1 + 1, c]
            v = (1.0 - f2) * q2[a2, c] + f2 * q2[a2 + 1, c]
            diff = u - root * v
            val += diff * diff
        if s == 0 or s == n - 1:
            total += 0.5 * val
        else:
            total += val
    return total * di / ((n - 1) * (T - 1))


@njit(cache=True, nogil=True)
def _dp_align(q1, q2, stencil):
    T = q1.shape[0]
    E = np.full((T, T), np.inf)
    back = np.full((T, T), -1, dtype=np.int64)
    E[0, 0] = 0.0
    for i in range(1, T):
        for j in range(1, T):
            best = np.inf
            arg = -1
            for s in range(stencil.shape[0]):
                di = stencil[s, 0]
                dj = stencil[s, 1]
                k = i - di
                l = j - dj
                if k < 0 or l < 0:
                    continue
                prev = E[k, l]
                if prev == np.inf:
                    continue
                c = prev + _segment_cost(q1, q2, k, l, i, j, T)
                if c < best:
                    best = c
                    arg = s
            E[i, j] = best
            back[i, j] = arg
    # walk back from the far corner
    path_i = np.empty(T, dtype=np.int64)
    path_j = np.empty(T, dtype=np.int64)
    n = 0
    i = T - 1
    j = T - 1
    path_i[n] = i
    path_j[n] = j
    n += 1
    while i > 0 or j > 0:
        s = back[i, j]
        i -= stencil[s, 0]
        j -= stencil[s, 1]
        path_i[n] = i
        path_j[n] = j
        n += 1
    return path_i[:n][::-1].copy(), path_j[:n][::-1].copy(), E[T - 1, T - 1]


def optimal_reparam(q1: np.ndarray, q2: np.ndarray, stencil: np.ndarray = DP_STENCIL) -> np.ndarray:
    """Warping ``gamma`` minimizing ``||q1 - (q2, gamma)||`` over the DP lattice."""
    q1 = np.ascontiguousarray(q1, dtype=float)
    q2 = np.ascontiguousarray(q2, dtype=float)
    if q1.shape != q2.shape:
        raise ValueError(f"srvf grids differ: {q1.shape} vs {q2.shape}")
    T = len(q1)
    pi, pj, _ = _dp_align(q1, q2, stencil)
    h = 1.0 / (T - 1)
    gamma = np.interp(_grid(T), pi * h, pj * h)
    gamma[0], gamma[-1] = 0.0, 1.0
    return np.maximum.accumulate(gamma)


def _align(mu: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, float]:
    """Best of the DP warping and the identity; both are admissible."""
    gamma = optimal_reparam(mu, q)
    aligned = apply_reparam(q, gamma)
    d_aligned = l2_norm(mu - aligned)
    d_plain = l2_norm(mu - q)
    if d_plain <= d_aligned:
        return np.array(q, dtype=float), d_plain
    return aligned, d_aligned


def shape_distance(q1: np.ndarray, q2: np.ndarray) -> float:
    """Elastic distance ``min_gamma ||q1 - (q2, gamma)||``."""
    return _align(np.asarray(q1, dtype=float), np.asarray(q2, dtype=float))[1]


def karcher_mean(
    qs,
    max_iter: int = KARCHER_MAX_ITER,
    tol: float = KARCHER_TOL,
    return_costs: bool = False,
):
    """Iterative elastic mean of a list of srvfs.

    Starts at the member with the smallest summed plain L2 distance to the
    rest (lowest index on ties). Each round aligns every member to the
    current mean and averages. A member keeps its previous alignment when the
    new warping does not beat it, which makes the cost sequence monotone.

    Returns the mean srvf, and the per-round cost list when ``return_costs``.
    """
    qs = [np.asarray(q, dtype=float) for q in qs]
    if not qs:
        raise ValueError("empty mean")
    n = len(qs)
    if n == 1:
        mu = qs[0].copy()
        return (mu, [0.0]) if return_costs else mu

    plain = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            plain[a, b] = plain[b, a] = l2_norm(qs[a] - qs[b])
    mu = qs[int(np.argmin(plain.sum(axis=1)))].copy()

    step = [_realign(mu, q, q) for q in qs]
    aligned = [a for a, _ in step]
    costs = [float(sum(d * d for _, d in step))]

    for _ in range(max_iter):
        # written as an offset so identical members reproduce mu bit-exactly
        cand = mu + np.mean([a - mu for a in aligned], axis=0)
        step = [_realign(cand, q, a) for q, a in zip(qs, aligned)]
        cost = float(sum(d * d for _, d in step))
        if cost > costs[-1]:
            # rounding at a fixed point; keep the previous state
            break
        mu = cand
        aligned = [a for a, _ in step]
        costs.append(cost)
        if costs[-2] - costs[-1] <= tol * costs[-2]:
            break
    return (mu, costs) if return_costs else mu


def _realign(mu: np.ndarray, q: np.ndarray, previous: np.ndarray) -> tuple[np.ndarray, float]:
    cand, d = _align(mu, q)
    d_prev = l2_norm(mu - previous)
    if d_prev <= d:
        return previous, d_prev
    return cand, d


def _rotation_between(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Minimal rotation taking unit vector ``src`` onto unit vector ``dst``."""
    d = len(src)
    if d == 2:
        ang = np.arctan2(dst[1], dst[0]) - np.arctan2(src[1], src[0])
        c, s = np.cos(ang), np.sin(ang)
        return np.array([[c, -s], [s, c]])
    v = np.cross(src, dst)
    c = float(np.dot(src, dst))
    if c < -1.0 + 1e-12:
        # anti-parallel: half turn about a fixed perpendicular axis
        k = int(np.argmin(np.abs(src)))
        axis = np.cross(src, np.eye(3)[k])
        axis /= np.linalg.norm(axis)
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    vx = np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def fit_to_endpoints(curve: np.ndarray, v_a: np.ndarray, v_b: np.ndarray) -> np.ndarray:
    """Rotate, scale and translate ``curve`` so it runs from ``v_a`` to ``v_b``.

    A closed curve (coincident endpoints) has no chord to align; it is scaled
    so its arc length equals ``|v_b - v_a|`` and translated to start at ``v_a``.
    """
    curve = np.asarray(curve, dtype=float)
    v_a = np.asarray(v_a, dtype=float)
    v_b = np.asarray(v_b, dtype=float)
    rel = curve - curve[0]
    chord = rel[-1]
    target = v_b - v_a
    c_len = np.linalg.norm(chord)
    t_len = np.linalg.norm(target)
    if c_len <= 1e-12:
        length = np.linalg.norm(np.diff(curve, axis=0), axis=1).sum()
        scale = t_len / length if length > 0 else 0.0
        return v_a + scale * rel
    if t_len == 0.0:
        return np.repeat(v_a[None, :], len(curve), axis=0)
    R = _rotation_between(chord / c_len, target / t_len)
    out = v_a + (t_len / c_len) * rel @ R.T
    out[0] = v_a
    out[-1] = v_b
    return out


def mean_edge(edges, v_a, v_b, T: int | None = None) -> np.ndarray:
    """Elastic mean of ``edges`` repositioned to connect ``v_a`` to ``v_b``.

    Every input is oriented by the caller (start near ``v_a``). Inputs are
    similarity-fit to the destination pair, averaged in srvf space, and the
    integrated mean is fit to the pair again. If the mean integrates to a
    closed curve the result falls back to the straight segment.
    """
    edges = [np.asarray(e, dtype=float) for e in edges]
    if not edges:
        raise ValueError("empty mean")
    v_a = np.asarray(v_a, dtype=float)
    v_b = np.asarray(v_b, dtype=float)
    if np.array_equal(v_a, v_b):
        raise ValueError("destination nodes coincide")
    if T is None:
        T = max(len(e) for e in edges)
    fitted = [resample_edge(fit_to_endpoints(e, v_a, v_b), T) for e in edges]
    if len(fitted) == 1:
        return _snap(fitted[0], v_a, v_b)
    srvfs = [to_srvf(c) for c in fitted]
    mu = karcher_mean(srvfs)
    for e, c, q in zip(edges, fitted, srvfs):
        # the mean landed on a member (e.g. identical inputs): skip the
        # lossy integration round trip, and hand back the member untouched
        # when it already fits
        if np.array_equal(mu, q):
            if len(e) == T and np.array_equal(e[0], v_a) and np.array_equal(e[-1], v_b):
                return e.copy()
            return _snap(c, v_a, v_b)
    raw = from_srvf(mu)
    if np.linalg.norm(raw[-1] - raw[0]) <= 1e-9 * max(np.abs(raw).max(), 1.0):
        straight = np.linspace(0.0, 1.0, T)[:, None] * (v_b - v_a) + v_a
        return _snap(straight, v_a, v_b)
    out = resample_edge(fit_to_endpoints(raw, v_a, v_b), T)
    return _snap(out, v_a, v_b)


def _snap(curve: np.ndarray, v_a: np.ndarray, v_b: np.ndarray) -> np.ndarray:
    curve = np.array(curve, dtype=float)
    curve[0] = v_a
    curve[-1] = v_b
    return curve
