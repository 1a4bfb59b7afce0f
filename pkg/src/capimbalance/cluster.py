"""Agglomerative hierarchical clustering with deterministic tie-breaking.

Node ids follow the usual convention: leaves are ``0..n-1`` and the
cluster created by merge ``k`` gets id ``n + k``. A smaller id is an
older cluster.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from .distmetrics import DistanceMatrix
from .errors import ContractError

Linkage = Literal["single", "complete", "average", "ward"]
LINKAGES = ("single", "complete", "average", "ward")


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    merges: tuple[Merge, ...]
    leaf_labels: tuple
    linkage: str = "average"

    def __post_init__(self) -> None:
        n = len(self.leaf_labels)
        if len(self.merges) != max(n - 1, 0):
            raise ContractError(f"{n} leaves need {n - 1} merges, got {len(self.merges)}")
        seen: set[int] = set()
        for k, m in enumerate(self.merges):
            for child in (m.left, m.right):
                if not 0 <= child < n + k or child in seen:
                    raise ContractError(f"merge {k} references invalid or reused node {child}")
                seen.add(child)

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_labels)

    @property
    def heights(self) -> np.ndarray:
        return np.array([m.height for m in self.merges])

    def to_dict(self) -> dict:
        return {
            "labels": [str(x) for x in self.leaf_labels],
            "linkage": self.linkage,
            "merges": [[m.left, m.right, m.height, m.size] for m in self.merges],
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, data: dict) -> "Dendrogram":
        merges = tuple(Merge(int(a), int(b), float(h), int(s)) for a, b, h, s in data["merges"])
        return cls(merges, tuple(data["labels"]), data.get("linkage", "average"))


def l1_trajectory_distance(wi: Sequence[float], wj: Sequence[float]) -> float:
    a = np.asarray(wi, dtype=float).ravel()
    b = np.asarray(wj, dtype=float).ravel()
    if a.shape != b.shape:
        raise ContractError(f"trajectory lengths differ: {a.size} vs {b.size}")
    return float(np.abs(a - b).sum())


def l1_distance_matrix(trajectories: np.ndarray, labels: Sequence) -> DistanceMatrix:
    """Pairwise L1 distances between the columns of a (time x asset) weight matrix."""
    w = np.asarray(trajectories, dtype=float)
    m = w.shape[1]
    out = np.zeros((m, m))
    for i in range(m):
        out[i, i + 1 :] = np.abs(w[:, i + 1 :] - w[:, [i]]).sum(axis=0)
    out = out + out.T
    return DistanceMatrix(tuple(labels), out)


def _update(method: str, d_ik, d_jk, d_ij, n_i, n_j, n_k):
    if method == "single":
        return np.minimum(d_ik, d_jk)
    if method == "complete":
        return np.maximum(d_ik, d_jk)
    if method == "average":
        return (n_i * d_ik + n_j * d_jk) / (n_i + n_j)
    # ward, Lance-Williams form on unsquared distances
    tot = n_i + n_j + n_k
    sq = ((n_i + n_k) * d_ik**2 + (n_j + n_k) * d_jk**2 - n_k * d_ij**2) / tot
    return np.sqrt(np.maximum(sq, 0.0))


def agglomerate(d: DistanceMatrix | np.ndarray, linkage: Linkage = "average", labels: Sequence | None = None) -> Dendrogram:
    """Naive O(n^3) agglomerative clustering.

    Ties on the minimal linkage distance go to the lexicographically
    smallest ``(older id, younger id)`` pair, so output is bit-identical
    across runs.
    """
    if linkage not in LINKAGES:
        raise ContractError(f"unknown linkage {linkage!r}")
    if isinstance(d, DistanceMatrix):
        labels = d.labels if labels is None else tuple(labels)
        dist = np.array(d.entries, dtype=float)
    else:
        dist = np.array(d, dtype=float)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise ContractError("distance matrix must be square")
        if (dist < 0).any() or np.abs(dist - dist.T).max(initial=0.0) > 1e-12:
            raise ContractError("distance matrix must be symmetric and nonnegative")
        labels = tuple(range(dist.shape[0])) if labels is None else tuple(labels)
    n = dist.shape[0]
    if n < 2:
        raise ContractError("need at least two items to cluster")

    # slot s holds cluster ids[s]; merged clusters reuse the slot of the older member
    ids = np.arange(n)
    sizes = np.ones(n)
    active = np.ones(n, dtype=bool)
    dist = dist.copy()
    np.fill_diagonal(dist, np.inf)
    merges: list[Merge] = []
    iu = np.triu_indices(n, 1)
    for k in range(n - 1):
        live = active[iu[0]] & active[iu[1]]
        cand = dist[iu][live]
        best = cand.min()
        rows, cols = iu[0][live][cand == best], iu[1][live][cand == best]
        a, b = ids[rows], ids[cols]
        old, young = np.minimum(a, b), np.maximum(a, b)
        pick = np.lexsort((young, old))[0]
        si, sj = int(rows[pick]), int(cols[pick])
        if ids[si] > ids[sj]:
            si, sj = sj, si
        merges.append(Merge(int(ids[si]), int(ids[sj]), float(best), int(sizes[si] + sizes[sj])))

        others = active.copy()
        others[[si, sj]] = False
        new = _update(linkage, dist[si, others], dist[sj, others], dist[si, sj], sizes[si], sizes[sj], sizes[others])
        dist[si, others] = new
        dist[others, si] = new
        active[sj] = False
        dist[sj, :] = np.inf
        dist[:, sj] = np.inf
        sizes[si] += sizes[sj]
        ids[si] = n + k
    return Dendrogram(tuple(merges), tuple(labels), linkage)


def cut(dend: Dendrogram, k: int) -> np.ndarray:
    """Flat labels from undoing the last ``k - 1`` merges.

    Labels are 0..k-1, numbered by first appearance in leaf index order.
    """
    n = dend.n_leaves
    if not 1 <= k <= n:
        raise ContractError(f"k must be in [1, {n}], got {k}")
    parent = list(range(2 * n - 1))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step, m in enumerate(dend.merges[: n - k]):
        parent[find(m.left)] = n + step
        parent[find(m.right)] = n + step
    labels = np.empty(n, dtype=int)
    seen: dict[int, int] = {}
    for leaf in range(n):
        labels[leaf] = seen.setdefault(find(leaf), len(seen))
    return labels


def leaf_order(dend: Dendrogram) -> list[int]:
    """Left-to-right leaf sequence of the tree (left child = older node)."""
    n = dend.n_leaves
    if n == 1:
        return [0]
    order: list[int] = []
    stack = [2 * n - 2]
    while stack:
        node = stack.pop()
        if node < n:
            order.append(node)
        else:
            m = dend.merges[node - n]
            stack.append(m.right)
            stack.append(m.left)
    return order
