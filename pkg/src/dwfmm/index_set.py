"""Weighted total-degree multi-index sets and the interpolation point counts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEGREE_TOL = 1e-12


@dataclass(frozen=True)
class WeightedIndexSet:
    """The multi-indices ``alpha`` with ``sum_k omega_k alpha_k <= q``.

    ``indices`` is an ``(n, d)`` integer array sorted by weighted degree;
    ties are broken by descending lexicographic order.
    """

    omega: np.ndarray
    q: float
    indices: np.ndarray

    @property
    def d(self) -> int:
        return self.indices.shape[1]

    def __len__(self) -> int:
        return self.indices.shape[0]

    @property
    def max_degrees(self) -> np.ndarray:
        return self.indices.max(axis=0)

    def weighted_degrees(self) -> np.ndarray:
        return self.indices @ self.omega

    def key(self) -> tuple:
        return (self.d, float(self.q), tuple(np.round(self.omega, 14)))


def cardinality_bound(omega, q: float) -> float:
    """Upper bound ``prod_k (q / (k omega_k) + 1)`` for ascending ``omega``."""
    omega = np.asarray(omega, dtype=float)
    if np.any(np.diff(omega) < 0.0):
        raise ValueError("omega must be sorted in ascending order")
    if np.any(omega <= 0.0):
        raise ValueError("non-positive weight")
    if q < 0:
        return 0.0
    k = np.arange(1, omega.size + 1)
    return float(np.prod(q / (k * omega) + 1.0))


def _count(omega: np.ndarray, q: float) -> int:
    # exact cardinality via the same recursion as the enumeration, without storage
    d = omega.size

    def rec(k: int, budget: float) -> int:
        if k == d:
            return 1
        total = 0
        a = 0
        while a * omega[k] <= budget + DEGREE_TOL:
            total += rec(k + 1, budget - a * omega[k])
            a += 1
        return total

    return rec(0, q)


def enumerate_indices(omega, q: float, d: int | None = None, cap: int = 10**7) -> WeightedIndexSet:
    """Enumerate ``{alpha >= 0 : sum_k omega_k alpha_k <= q}``.

    Raises ``ValueError`` for non-positive weights and when the predicted
    cardinality exceeds ``cap``.
    """
    omega = np.asarray(omega, dtype=float)
    if d is None:
        d = omega.size
    if omega.shape != (d,):
        raise ValueError(f"omega must have length d={d}")
    if q < 0:
        return WeightedIndexSet(omega, float(q), np.zeros((0, d), dtype=np.int64))
    if np.any(omega <= 0.0):
        raise ValueError("non-positive weight")
    if cardinality_bound(np.sort(omega), q) > cap:
        raise ValueError(f"index set cardinality would exceed cap={cap}")

    rows: list[tuple[int, ...]] = []
    prefix = [0] * d

    def rec(k: int, budget: float) -> None:
        if k == d:
            rows.append(tuple(prefix))
            return
        a = 0
        while a * omega[k] <= budget + DEGREE_TOL:
            prefix[k] = a
            rec(k + 1, budget - a * omega[k])
            a += 1
        prefix[k] = 0

    rec(0, float(q))
    indices = np.array(rows, dtype=np.int64).reshape(-1, d)
    degree = np.round(indices @ omega, 10)
    # lexsort: last key is primary
    order = np.lexsort(tuple(-indices[:, k] for k in reversed(range(d))) + (degree,))
    return WeightedIndexSet(omega, float(q), indices[order])


def index_set_size(omega, q: float) -> int:
    omega = np.asarray(omega, dtype=float)
    if q < 0:
        return 0
    if np.any(omega <= 0.0):
        raise ValueError("non-positive weight")
    return _count(omega, float(q))


def tpi_count(q: int, d: int) -> int:
    return (q + 1) ** d


def tdi_count(q: int, d: int) -> int:
    return math.comb(q + d, d)
