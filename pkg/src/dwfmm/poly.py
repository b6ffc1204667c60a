"""Tensor Legendre bases on the unit cube and approximate Fekete interpolation nodes."""

from __future__ import annotations

import hashlib
import os
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .index_set import WeightedIndexSet


def _first_primes(count: int) -> np.ndarray:
    primes = []
    n = 2
    while len(primes) < count:
        if all(n % p for p in primes if p * p <= n):
            primes.append(n)
        n += 1
    return np.array(primes, dtype=np.int64)


PRIMES = _first_primes(100)


class SchemeError(RuntimeError):
    """Raised when the interpolation nodes are not unisolvent."""


def legendre_eval_all(max_degree: int, x) -> np.ndarray:
    """Orthonormal shifted Legendre polynomials ``p_0..p_max_degree`` on [0, 1].

    ``x`` may be a scalar or an array; the degree axis is appended last.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-9) or np.any(x > 1.0 + 1e-9):
        raise ValueError("Legendre evaluation points must lie in [0, 1]")
    t = 2.0 * x - 1.0
    out = np.empty(x.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    if max_degree >= 1:
        out[..., 1] = t
    for j in range(1, max_degree):
        out[..., j + 1] = ((2 * j + 1) * t * out[..., j] - j * out[..., j - 1]) / (j + 1)
    out *= np.sqrt(2.0 * np.arange(max_degree + 1) + 1.0)
    return out


def tensor_eval(index_set: WeightedIndexSet, x) -> np.ndarray:
    """Evaluate all ``p_alpha``, alpha in the index set, at points ``x`` (m x d).

    Returns an ``(m, n_alpha)`` array (or a vector for a single point).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    alpha = index_set.indices
    if x.shape[1] != alpha.shape[1]:
        raise ValueError("point dimension does not match the index set")
    out = np.ones((x.shape[0], alpha.shape[0]))
    for k in range(alpha.shape[1]):
        deg = int(alpha[:, k].max())
        if deg == 0:
            continue
        table = legendre_eval_all(deg, x[:, k])
        out *= table[:, alpha[:, k]]
    return out[0] if single else out


def radical_inverse(i, base: int) -> np.ndarray:
    i = np.array(i, dtype=np.int64, copy=True)
    result = np.zeros(i.shape)
    f = 1.0 / base
    while np.any(i > 0):
        result += f * (i % base)
        i //= base
        f /= base
    return result


def halton(i, d: int) -> np.ndarray:
    """Halton point(s) for index ``i`` (0-based, sequence starts at 1) in ``d`` dims."""
    if d > PRIMES.size:
        raise ValueError(f"Halton sequence supports at most {PRIMES.size} dimensions")
    i = np.asarray(i, dtype=np.int64)
    return np.stack([radical_inverse(i + 1, int(p)) for p in PRIMES[:d]], axis=-1)


@dataclass(frozen=True)
class InterpolationScheme:
    index_set: WeightedIndexSet
    nodes: np.ndarray
    vandermonde: np.ndarray
    lu: tuple
    condition_estimate: float

    @property
    def size(self) -> int:
        return len(self.index_set)

    @property
    def d(self) -> int:
        return self.index_set.d


def _factorize(index_set: WeightedIndexSet, nodes: np.ndarray, condition_estimate=None):
    V = tensor_eval(index_set, nodes)
    with warnings.catch_warnings():
        # singularity is reported below as SchemeError
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(V, check_finite=True)
    diag = np.abs(np.diag(lu))
    if diag.min() <= 1e-14 * diag.max():
        raise SchemeError("Vandermonde matrix is singular for the given nodes")
    if condition_estimate is None:
        condition_estimate = float(diag.max() / diag.min())
    return InterpolationScheme(index_set, nodes, V, (lu, piv), float(condition_estimate))


def scheme_from_nodes(index_set: WeightedIndexSet, nodes) -> InterpolationScheme:
    """Interpolation scheme on user-provided nodes (one per basis function)."""
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    if nodes.shape != (len(index_set), index_set.d):
        raise ValueError("need exactly one node per basis function")
    return _factorize(index_set, nodes)


def default_candidate_count(n: int) -> int:
    return max(n, min(20 * n, 10**6))


def approximate_fekete(
    index_set: WeightedIndexSet, candidate_count: Optional[int] = None, seed: int = 0
) -> InterpolationScheme:
    """Greedy determinant-maximising nodes from a Halton candidate cloud.

    Column-pivoted QR of the transposed candidate Vandermonde matrix picks
    the candidates in pivot order. ``seed`` offsets the start of the Halton
    sequence.
    """
    n = len(index_set)
    if candidate_count is None:
        candidate_count = default_candidate_count(n)
    if candidate_count < n:
        raise ValueError("candidate_count must be at least the number of basis functions")
    candidates = halton(np.arange(seed, seed + candidate_count), index_set.d)
    W = tensor_eval(index_set, candidates)
    R, piv = sla.qr(W.T, mode="r", pivoting=True)
    diag = np.abs(np.diag(R)[:n])
    if diag[-1] < 1e-12 * diag[0]:
        raise SchemeError("candidate set insufficient; increase candidate_count")
    nodes = candidates[piv[:n]]
    return _factorize(index_set, nodes, condition_estimate=diag[0] / diag[-1])


def vandermonde_solve(scheme: InterpolationScheme, rhs, transpose: bool = False) -> np.ndarray:
    """Apply ``V^{-1}`` (or ``V^{-T}``) to ``rhs`` through the LU factors."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != scheme.size:
        raise ValueError(f"rhs must have {scheme.size} rows")
    return sla.lu_solve(scheme.lu, rhs, trans=1 if transpose else 0)


def lagrange_values(scheme: InterpolationScheme, x) -> np.ndarray:
    """Lagrange basis values ``l_j(x)`` as an ``(m, n)`` array."""
    P = np.atleast_2d(tensor_eval(scheme.index_set, x))
    return vandermonde_solve(scheme, P.T, transpose=True).T


def lebesgue_estimate(scheme: InterpolationScheme, sample_count: int = 2000, seed: int = 0) -> float:
    """Sampled lower bound on the Lebesgue constant over Halton points."""
    best = 0.0
    chunk = 4096
    for start in range(seed, seed + sample_count, chunk):
        stop = min(start + chunk, seed + sample_count)
        pts = halton(np.arange(start, stop), scheme.d)
        best = max(best, float(np.abs(lagrange_values(scheme, pts)).sum(axis=1).max()))
    return best


def _cache_key(index_set: WeightedIndexSet, candidate_count: int, seed: int) -> str:
    h = hashlib.sha256(np.asarray(index_set.omega, dtype="<f8").tobytes()).hexdigest()[:16]
    return f"fekete_d{index_set.d}_q{index_set.q:g}_w{h}_m{candidate_count}_s{seed}.npz"


def cached_fekete(
    index_set: WeightedIndexSet,
    candidate_count: Optional[int] = None,
    seed: int = 0,
    cache_dir: Optional[str] = None,
) -> InterpolationScheme:
    """:func:`approximate_fekete` with an on-disk node cache."""
    if candidate_count is None:
        candidate_count = default_candidate_count(len(index_set))
    if cache_dir is None:
        return approximate_fekete(index_set, candidate_count, seed)
    path = os.path.join(cache_dir, _cache_key(index_set, candidate_count, seed))
    if os.path.exists(path):
        with np.load(path) as data:
            if np.array_equal(data["indices"], index_set.indices):
                return _factorize(index_set, data["nodes"], float(data["condition_estimate"]))
    scheme = approximate_fekete(index_set, candidate_count, seed)
    os.makedirs(cache_dir, exist_ok=True)
    np.savez(
        path,
        indices=index_set.indices,
        nodes=scheme.nodes,
        condition_estimate=scheme.condition_estimate,
    )
    return scheme
