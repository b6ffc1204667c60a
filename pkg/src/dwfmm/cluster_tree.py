"""Cardinality-balanced binary cluster tree."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import BoundingBox, PointSet, compute_bounding_box


@dataclass
class Cluster:
    id: int
    level: int
    start: int
    stop: int
    bbox: BoundingBox
    parent: Optional[int] = None
    children: tuple = ()

    @property
    def size(self) -> int:
        return self.stop - self.start

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class ClusterTree:
    clusters: list
    points: PointSet
    leaf_size: int
    root: int = 0
    _levels: list = field(default=None, repr=False)

    @property
    def depth(self) -> int:
        return max(c.level for c in self.clusters)

    def __getitem__(self, cid: int) -> Cluster:
        return self.clusters[cid]

    def __len__(self) -> int:
        return len(self.clusters)

    def leaves(self) -> list:
        """Leaf clusters in index order; their ranges tile ``[0, N)``."""
        return sorted((c for c in self.clusters if c.is_leaf), key=lambda c: c.start)

    def level_clusters(self, j: int) -> list:
        if j < 0 or j > self.depth:
            raise ValueError(f"level {j} outside 0..{self.depth}")
        return [c for c in self.clusters if c.level == j]

    def stats(self) -> dict:
        leaves = self.leaves()
        sizes = [c.size for c in leaves]
        return {
            "n_points": self.points.n,
            "depth": self.depth,
            "n_clusters": len(self.clusters),
            "n_leaves": len(leaves),
            "min_leaf_size": min(sizes),
            "max_leaf_size": max(sizes),
            "clusters_per_level": [len(self.level_clusters(j)) for j in range(self.depth + 1)],
        }


def build_tree(points: PointSet, leaf_size: int = 32) -> ClusterTree:
    """Recursive median split along the longest bounding-box edge.

    Returns a tree over a reordered copy of ``points``; each cluster owns a
    contiguous index range. Ties in the split coordinate are broken by the
    original point index.
    """
    if leaf_size < 1:
        raise ValueError("leaf_size must be positive")
    coords = points.coords.copy()
    perm = points.permutation.copy()
    clusters: list[Cluster] = []

    def make(start: int, stop: int, level: int, parent: Optional[int]) -> int:
        cid = len(clusters)
        clusters.append(Cluster(cid, level, start, stop, compute_bounding_box(coords, (start, stop)), parent))
        return cid

    stack = [make(0, points.n, 0, None)]
    while stack:
        cid = stack.pop()
        c = clusters[cid]
        if c.size <= leaf_size:
            continue
        axis = int(np.argmax(c.bbox.edges))
        sub = slice(c.start, c.stop)
        order = np.lexsort((perm[sub], coords[sub, axis]))
        coords[sub] = coords[sub][order]
        perm[sub] = perm[sub][order]
        mid = c.start + c.size // 2
        left = make(c.start, mid, c.level + 1, cid)
        right = make(mid, c.stop, c.level + 1, cid)
        c.children = (left, right)
        stack.extend((right, left))

    return ClusterTree(clusters, PointSet(coords, perm), leaf_size)
