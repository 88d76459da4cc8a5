"""Agglomerative clustering on precomputed dissimilarities.

The merge tree uses the usual numbering: leaves are ``0..k-1`` and the
cluster formed by merge ``s`` gets id ``k + s``. Ties go to the lowest
``(i, j)`` pair in row-major order, where a cluster is indexed by its
smallest leaf, and each merge lists the smaller cluster id first. No metric
assumption is made, so chamfer distances are fine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LINKAGES = ("single", "complete", "average")


@dataclass(frozen=True)
class Dendrogram:
    merges: tuple[tuple[int, int, float], ...]
    n_leaves: int

    def heights(self) -> np.ndarray:
        return np.array([h for _, _, h in self.merges])

    def as_array(self) -> np.ndarray:
        """``(k-1, 4)`` array ``[left, right, height, size]``, scipy layout."""
        sizes = [1] * self.n_leaves
        rows = []
        for a, b, h in self.merges:
            sizes.append(sizes[a] + sizes[b])
            rows.append((a, b, h, sizes[-1]))
        return np.array(rows, dtype=float).reshape(-1, 4)


def linkage(D, method: str = "single") -> Dendrogram:
    """Merge tree for a symmetric dissimilarity matrix under ``method``."""
    if method not in LINKAGES:
        raise ValueError(f"unknown linkage {method!r}; expected one of {LINKAGES}")
    D = np.array(D, dtype=float)
    k = D.shape[0]
    if D.shape != (k, k):
        raise ValueError("dissimilarity matrix must be square")
    if k <= 1:
        return Dendrogram((), k)
    work = D.copy()
    np.fill_diagonal(work, np.inf)
    size = np.ones(k)
    cluster_id = np.arange(k)
    active = np.ones(k, dtype=bool)
    merges = []
    for step in range(k - 1):
        flat = int(np.argmin(work))
        i, j = divmod(flat, k)
        if i > j:
            i, j = j, i
        h = float(work[i, j])
        a, b = sorted((int(cluster_id[i]), int(cluster_id[j])))
        merges.append((a, b, h))
        di, dj = work[i], work[j]
        if method == "single":
            new = np.minimum(di, dj)
        elif method == "complete":
            new = np.maximum(di, dj)
        else:
            new = (size[i] * di + size[j] * dj) / (size[i] + size[j])
        active[j] = False
        new[~active] = np.inf
        new[i] = np.inf
        work[i, :] = new
        work[:, i] = new
        work[j, :] = np.inf
        work[:, j] = np.inf
        size[i] += size[j]
        cluster_id[i] = k + step
    return Dendrogram(tuple(merges), k)


def _labels_after(dendro: Dendrogram, n_merges: int) -> np.ndarray:
    k = dendro.n_leaves
    members: dict[int, list[int]] = {i: [i] for i in range(k)}
    for s, (a, b, _) in enumerate(dendro.merges[:n_merges]):
        members[k + s] = members.pop(a) + members.pop(b)
    labels = np.empty(k, dtype=int)
    # label clusters by their smallest leaf so labels are canonical
    for lab, group in enumerate(sorted(members.values(), key=min)):
        labels[group] = lab
    return labels


def cut_by_count(dendro: Dendrogram, k_target: int) -> np.ndarray:
    """Labels for exactly ``k_target`` clusters (undo the last merges)."""
    k = dendro.n_leaves
    if not 1 <= k_target <= max(k, 1):
        raise ValueError(f"cluster count {k_target} outside [1, {k}]")
    return _labels_after(dendro, k - k_target)


def cut_by_ceiling(dendro: Dendrogram, radius: float) -> np.ndarray:
    """Labels from every merge at height ``<= radius``."""
    n = 0
    for _, _, h in dendro.merges:
        if h > radius:
            break
        n += 1
    return _labels_after(dendro, n)


def cluster_members(labels) -> list[list[int]]:
    """Index lists per label, in label order."""
    labels = np.asarray(labels)
    return [list(np.flatnonzero(labels == lab)) for lab in range(labels.max() + 1)] if len(labels) else []
