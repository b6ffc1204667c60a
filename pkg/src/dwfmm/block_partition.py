"""Farfield/nearfield block partition by dual tree recursion."""

from __future__ import annotations

from dataclasses import dataclass

from .cluster_tree import ClusterTree
from .geometry import BoundingBox, box_diam, box_dist


@dataclass
class BlockPartition:
    farfield: list
    nearfield: list
    eta: float

    def stats(self, tree: ClusterTree, n_lambda: int | None = None) -> dict:
        near_entries = sum(tree[a].size * tree[b].size for a, b in self.nearfield)
        n = tree.points.n
        out = {
            "n_blocks_far": len(self.farfield),
            "n_blocks_near": len(self.nearfield),
            "nearfield_entries": near_entries,
            "dense_entries": n * n,
        }
        if n_lambda is not None:
            forecast = n_lambda**2 * len(self.farfield) + near_entries
            out["compressed_entries_forecast"] = forecast
            out["compression_ratio_forecast"] = forecast / (n * n)
        return out


def is_admissible(a: BoundingBox, b: BoundingBox, eta: float) -> bool:
    return box_dist(a, b) >= eta * max(box_diam(a), box_diam(b))


def build_partition(tree: ClusterTree, eta: float = 0.5) -> BlockPartition:
    """Split ``tree x tree`` into maximal admissible blocks and leaf-leaf nearfield blocks.

    When only one cluster of an inadmissible pair has children, the recursion
    descends on that side alone.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    far, near = [], []
    stack = [(tree.root, tree.root)]
    while stack:
        s, t = stack.pop()
        cs, ct = tree[s], tree[t]
        if s != t and is_admissible(cs.bbox, ct.bbox, eta):
            far.append((s, t))
        elif cs.is_leaf and ct.is_leaf:
            near.append((s, t))
        else:
            left = cs.children or (s,)
            right = ct.children or (t,)
            stack.extend((a, b) for a in reversed(left) for b in reversed(right))
    far.sort()
    near.sort()
    return BlockPartition(far, near, float(eta))
