"""Point sets, axis-parallel boxes and the distance primitives used for admissibility."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PointSet:
    """Data sites ``coords`` (N x d) with the permutation to original order.

    ``permutation[i]`` is the original index of the point stored in row ``i``.
    """

    coords: np.ndarray
    permutation: np.ndarray = field(default=None)

    def __post_init__(self):
        coords = np.ascontiguousarray(np.asarray(self.coords, dtype=float))
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2 or coords.shape[0] == 0 or coords.shape[1] == 0:
            raise ValueError(f"coords must be a non-empty N x d array, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coords contain non-finite entries")
        self.coords = coords
        if self.permutation is None:
            self.permutation = np.arange(coords.shape[0])
        else:
            perm = np.asarray(self.permutation, dtype=np.int64)
            if perm.shape != (coords.shape[0],) or not np.array_equal(
                np.sort(perm), np.arange(coords.shape[0])
            ):
                raise ValueError("permutation must be a bijection on 0..N-1")
            self.permutation = perm

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def to_original_order(self, values: np.ndarray) -> np.ndarray:
        """Scatter row-ordered ``values`` back to the input ordering."""
        out = np.empty_like(values)
        out[self.permutation] = values
        return out

    def from_original_order(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values)[self.permutation]


@dataclass(frozen=True)
class BoundingBox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be vectors of equal length")
        if np.any(lo > hi):
            raise ValueError("lo must not exceed hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def edges(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, x: np.ndarray, tol: float = 0.0) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all((x >= self.lo - tol) & (x <= self.hi + tol), axis=1)

    def cube_map(self) -> "AffineCubeMap":
        return AffineCubeMap(self.lo, self.edges)


@dataclass(frozen=True)
class AffineCubeMap:
    """Map ``x = shift + scale * xhat`` from the unit cube onto a box.

    Coordinates with zero scale invert to the cube midpoint 0.5.
    """

    shift: np.ndarray
    scale: np.ndarray

    def __call__(self, xhat: np.ndarray) -> np.ndarray:
        return self.shift + self.scale * np.asarray(xhat)

    def inverse(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        degenerate = self.scale <= 0.0
        safe = np.where(degenerate, 1.0, self.scale)
        xhat = (x - self.shift) / safe
        xhat = np.where(degenerate, 0.5, xhat)
        # tight boxes: roundoff may push a boundary point a few ulps outside
        return np.clip(xhat, 0.0, 1.0)


def compute_bounding_box(points, index_range=None) -> BoundingBox:
    """Smallest axis-parallel box containing ``points[start:stop]``.

    ``points`` may be a :class:`PointSet` or a raw coordinate array.
    """
    coords = points.coords if isinstance(points, PointSet) else np.atleast_2d(points)
    start, stop = (0, coords.shape[0]) if index_range is None else index_range
    if not 0 <= start < stop <= coords.shape[0]:
        raise ValueError("empty cluster")
    sub = coords[start:stop]
    return BoundingBox(sub.min(axis=0), sub.max(axis=0))


def box_diam(box: BoundingBox) -> float:
    return float(np.linalg.norm(box.hi - box.lo))


def box_dist(a: BoundingBox, b: BoundingBox) -> float:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    gap = np.maximum(0.0, np.maximum(a.lo - b.hi, b.lo - a.hi))
    return float(np.sqrt(np.dot(gap, gap)))


def _min_pair_distance(coords: np.ndarray, chunk: int = 1024, keep: int = 8) -> float:
    n = coords.shape[0]
    sq = np.einsum("ij,ij->i", coords, coords)
    pairs = []
    for start in range(0, n - 1, chunk):
        stop = min(start + chunk, n)
        d2 = sq[start:stop, None] - 2.0 * coords[start:stop] @ coords.T + sq[None, :]
        rows = np.arange(start, stop)
        d2[np.arange(n)[None, :] <= rows[:, None]] = np.inf
        flat = np.argpartition(d2, min(keep, d2.size - 1), axis=None)[:keep]
        for f in flat:
            i, j = np.unravel_index(f, d2.shape)
            if np.isfinite(d2[i, j]):
                pairs.append((start + i, j))
    # Gram-trick cancellation is inexact for close pairs, so rescore candidates directly
    return min(float(np.linalg.norm(coords[i] - coords[j])) for i, j in pairs)


def separation_radius(points, cap: int = 20000, seed: int = 0) -> tuple[float, bool]:
    """Minimum pairwise distance of the point set.

    Above ``cap`` points the value is taken from a uniform subsample of size
    ``cap``; the second return value flags such an estimate.
    """
    coords = points.coords if isinstance(points, PointSet) else np.atleast_2d(points)
    n = coords.shape[0]
    if n < 2:
        raise ValueError("separation radius needs at least two points")
    approximate = n > cap
    if approximate:
        idx = np.random.default_rng(seed).choice(n, size=cap, replace=False)
        coords = coords[np.sort(idx)]
    return _min_pair_distance(coords), approximate
