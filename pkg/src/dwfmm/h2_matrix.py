"""Compressed kernel matrix with nested tensor-Legendre cluster bases.

Farfield blocks are stored as ``P_s C_st P_t^T`` with ``C_st = V^{-1} S_st V^{-T}``
where ``S_st`` samples the kernel at the Fekete nodes mapped into both
bounding boxes. Cluster bases are nested through transfer matrices, so only
leaf bases are stored explicitly. Only blocks with ``s <= t`` are kept; the
mirror block is applied transposed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .block_partition import BlockPartition, build_partition
from .cluster_tree import ClusterTree, build_tree
from .geometry import PointSet
from .index_set import enumerate_indices
from .poly import InterpolationScheme, cached_fekete, tensor_eval, vandermonde_solve


def default_leaf_size(n_lambda: int) -> int:
    return max(32, 2 * n_lambda)


def cluster_basis(tree: ClusterTree, scheme: InterpolationScheme, cid: int) -> np.ndarray:
    """Direct evaluation ``P_nu[i, alpha] = p_alpha(a_nu^{-1}(x_i))`` over all points of ``cid``."""
    c = tree[cid]
    xhat = c.bbox.cube_map().inverse(tree.points.coords[c.start : c.stop])
    return tensor_eval(scheme.index_set, xhat)


def transfer_matrix(tree: ClusterTree, scheme: InterpolationScheme, child: int) -> np.ndarray:
    """``T_child = V^{-1} [p^parent_alpha'(a_child(xi_alpha))]``."""
    c = tree[child]
    parent = tree[c.parent]
    nodes = c.bbox.cube_map()(scheme.nodes)
    E = tensor_eval(scheme.index_set, parent.bbox.cube_map().inverse(nodes))
    return vandermonde_solve(scheme, E)


@dataclass
class ClusterBasisSet:
    scheme: InterpolationScheme
    leaf_bases: dict
    transfers: dict

    def float_count(self) -> int:
        return sum(P.size for P in self.leaf_bases.values()) + sum(
            T.size for T in self.transfers.values()
        )


def build_cluster_bases(tree: ClusterTree, scheme: InterpolationScheme) -> ClusterBasisSet:
    leaf_bases = {c.id: cluster_basis(tree, scheme, c.id) for c in tree.leaves()}
    transfers = {c.id: transfer_matrix(tree, scheme, c.id) for c in tree.clusters if c.parent is not None}
    return ClusterBasisSet(scheme, leaf_bases, transfers)


def mapped_nodes(tree: ClusterTree, scheme: InterpolationScheme, cid: int) -> np.ndarray:
    return tree[cid].bbox.cube_map()(scheme.nodes)


def build_coupling(pair, kernel, tree: ClusterTree, scheme: InterpolationScheme) -> np.ndarray:
    """Coupling coefficients ``C = V^{-1} S V^{-T}`` for one admissible block."""
    s, t = pair
    S = kernel.matrix(mapped_nodes(tree, scheme, s), mapped_nodes(tree, scheme, t))
    A = vandermonde_solve(scheme, S)
    return vandermonde_solve(scheme, A.T).T


@dataclass
class H2Structure:
    """Everything that depends on the points but not on the kernel."""

    tree: ClusterTree
    partition: BlockPartition
    scheme: InterpolationScheme
    bases: ClusterBasisSet
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        tree = self.tree
        by_level: dict[int, list] = {}
        for c in tree.clusters:
            if not c.is_leaf:
                by_level.setdefault(c.level, []).append(c)
        # per level: (parents, first children, second children, T_first, T_second)
        self._levels = []
        for j in sorted(by_level):
            cs = by_level[j]
            par = np.array([c.id for c in cs])
            c1 = np.array([c.children[0] for c in cs])
            c2 = np.array([c.children[1] for c in cs])
            T1 = np.stack([self.bases.transfers[i] for i in c1])
            T2 = np.stack([self.bases.transfers[i] for i in c2])
            self._levels.append((par, c1, c2, T1, T2))
        self._leaves = [(c.id, c.start, c.stop) for c in tree.leaves()]
        far = [(s, t) for s, t in self.partition.farfield if s < t]
        self.far_pairs = np.array(far, dtype=np.int64).reshape(-1, 2)
        self._near_diag = [(s, t) for s, t in self.partition.nearfield if s == t]
        self._near_upper = [(s, t) for s, t in self.partition.nearfield if s < t]

    @property
    def n(self) -> int:
        return self.tree.points.n

    @property
    def n_lambda(self) -> int:
        return self.scheme.size

    def upward(self, x: np.ndarray) -> np.ndarray:
        xhat = np.zeros((len(self.tree), self.n_lambda, x.shape[1]))
        for cid, a, b in self._leaves:
            xhat[cid] = self.bases.leaf_bases[cid].T @ x[a:b]
        for par, c1, c2, T1, T2 in reversed(self._levels):
            xhat[par] = np.matmul(T1.transpose(0, 2, 1), xhat[c1]) + np.matmul(
                T2.transpose(0, 2, 1), xhat[c2]
            )
        return xhat

    def downward(self, yhat: np.ndarray, y: np.ndarray) -> None:
        for par, c1, c2, T1, T2 in self._levels:
            yhat[c1] += np.matmul(T1, yhat[par])
            yhat[c2] += np.matmul(T2, yhat[par])
        for cid, a, b in self._leaves:
            y[a:b] += self.bases.leaf_bases[cid] @ yhat[cid]


def build_structure(
    points: PointSet,
    omega,
    q: float,
    eta: float = 0.5,
    leaf_size: Optional[int] = None,
    candidate_count: Optional[int] = None,
    seed: int = 0,
    cache_dir: Optional[str] = None,
) -> H2Structure:
    timings = {}
    t0 = time.perf_counter()
    index_set = enumerate_indices(omega, q, points.dim)
    scheme = cached_fekete(index_set, candidate_count, seed, cache_dir)
    timings["scheme_ms"] = 1e3 * (time.perf_counter() - t0)
    if leaf_size is None:
        leaf_size = default_leaf_size(scheme.size)
    t0 = time.perf_counter()
    tree = build_tree(points, leaf_size)
    partition = build_partition(tree, eta)
    timings["tree_partition_ms"] = 1e3 * (time.perf_counter() - t0)
    t0 = time.perf_counter()
    bases = build_cluster_bases(tree, scheme)
    timings["bases_ms"] = 1e3 * (time.perf_counter() - t0)
    return H2Structure(tree, partition, scheme, bases, timings)


def _block_csr(tree: ClusterTree, pairs, kernel, n: int) -> sp.csr_matrix:
    # pairs sorted by (s, t) and leaves tile [0, N) in order, so rows arrive sorted
    coords = tree.points.coords
    by_row: dict[int, list] = {}
    for s, t in pairs:
        by_row.setdefault(s, []).append(t)
    data, indices = [], []
    indptr = np.zeros(n + 1, dtype=np.int64)
    for s in sorted(by_row, key=lambda cid: tree[cid].start):
        cs = tree[s]
        ts = sorted(by_row[s], key=lambda cid: tree[cid].start)
        cols = np.concatenate([np.arange(tree[t].start, tree[t].stop) for t in ts])
        block = kernel.matrix(coords[cs.start : cs.stop], coords[cols])
        data.append(block.ravel())
        indices.append(np.tile(cols, cs.size))
        indptr[cs.start + 1 : cs.stop + 1] = cols.size
    indptr = np.cumsum(indptr)
    if not data:
        return sp.csr_matrix((n, n))
    return sp.csr_matrix(
        (np.concatenate(data), np.concatenate(indices).astype(np.int32), indptr), shape=(n, n)
    )


@dataclass
class CompressedKernelMatrix:
    structure: H2Structure
    kernel: object
    coupling: np.ndarray
    near_diag: sp.csr_matrix
    near_upper: sp.csr_matrix
    ridge: float = 0.0
    timings: dict = field(default_factory=dict)

    @property
    def tree(self) -> ClusterTree:
        return self.structure.tree

    @property
    def partition(self) -> BlockPartition:
        return self.structure.partition

    @property
    def scheme(self) -> InterpolationScheme:
        return self.structure.scheme

    @property
    def bases(self) -> ClusterBasisSet:
        return self.structure.bases

    @property
    def shape(self) -> tuple:
        n = self.structure.n
        return (n, n)

    def with_ridge(self, ridge: float) -> "CompressedKernelMatrix":
        return CompressedKernelMatrix(
            self.structure, self.kernel, self.coupling, self.near_diag, self.near_upper, ridge, self.timings
        )

    def coupling_block(self, s: int, t: int) -> np.ndarray:
        pairs = self.structure.far_pairs
        a, b = (s, t) if s < t else (t, s)
        hit = np.nonzero((pairs[:, 0] == a) & (pairs[:, 1] == b))[0]
        if hit.size == 0:
            raise KeyError(f"({s}, {t}) is not a farfield block")
        C = self.coupling[hit[0]]
        return C if s < t else C.T

    def nearfield_block(self, s: int, t: int) -> np.ndarray:
        cs, ct = self.tree[s], self.tree[t]
        src = self.near_diag if s == t else (self.near_upper if s < t else self.near_upper.T.tocsr())
        return src[cs.start : cs.stop, ct.start : ct.stop].toarray()

    def float_count(self) -> int:
        return (
            self.bases.float_count()
            + self.coupling.size
            + self.near_diag.nnz
            + self.near_upper.nnz
        )

    def stats(self) -> dict:
        part = self.partition.stats(self.tree, self.scheme.size)
        floats = self.float_count()
        return {
            "n": self.structure.n,
            "n_blocks_far": part["n_blocks_far"],
            "n_blocks_near": part["n_blocks_near"],
            "n_lambda": self.scheme.size,
            "leaf_size": self.tree.leaf_size,
            "depth": self.tree.depth,
            "stored_floats": floats,
            "mem_bytes": 8 * floats,
            "dense_bytes": 8 * self.structure.n**2,
            "assembly_ms": sum(self.timings.values()) + sum(self.structure.timings.values()),
        }

    def matvec(self, x: np.ndarray, ridge: Optional[float] = None) -> np.ndarray:
        """``(K~ + ridge I) x`` for ``x`` in tree ordering; ``x`` may be ``(N,)`` or ``(N, m)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.structure.n:
            raise ValueError(f"vector length {x.shape[0]} does not match N={self.structure.n}")
        single = x.ndim == 1
        X = x[:, None] if single else x
        st = self.structure
        y = self.near_diag @ X + self.near_upper @ X + self.near_upper.T @ X
        if len(st.far_pairs):
            xhat = st.upward(X)
            yhat = np.zeros_like(xhat)
            s, t = st.far_pairs[:, 0], st.far_pairs[:, 1]
            np.add.at(yhat, s, np.matmul(self.coupling, xhat[t]))
            np.add.at(yhat, t, np.matmul(self.coupling.transpose(0, 2, 1), xhat[s]))
            st.downward(yhat, y)
        lam = self.ridge if ridge is None else ridge
        if lam:
            y += lam * X
        return y[:, 0] if single else y

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        return self.matvec(np.eye(self.structure.n))


def compress(structure: H2Structure, kernel, ridge: float = 0.0, batch: int = 512) -> CompressedKernelMatrix:
    """Kernel-dependent part of the assembly: couplings and nearfield blocks."""
    timings = {}
    t0 = time.perf_counter()
    tree, scheme = structure.tree, structure.scheme
    n_l = scheme.size
    pairs = structure.far_pairs
    nodes = np.stack([mapped_nodes(tree, scheme, c.id) for c in tree.clusters])
    coupling = np.empty((len(pairs), n_l, n_l))
    for start in range(0, len(pairs), batch):
        chunk = pairs[start : start + batch]
        S = np.stack([kernel.matrix(nodes[s], nodes[t]) for s, t in chunk])
        # V^{-1} S for the whole batch in one solve, then the same on the transposes
        A = vandermonde_solve(scheme, S.transpose(1, 0, 2).reshape(n_l, -1))
        A = A.reshape(n_l, len(chunk), n_l).transpose(1, 2, 0)
        C = vandermonde_solve(scheme, A.transpose(1, 0, 2).reshape(n_l, -1))
        coupling[start : start + len(chunk)] = C.reshape(n_l, len(chunk), n_l).transpose(1, 2, 0)
    timings["coupling_ms"] = 1e3 * (time.perf_counter() - t0)
    t0 = time.perf_counter()
    n = structure.n
    near_diag = _block_csr(tree, structure._near_diag, kernel, n)
    near_upper = _block_csr(tree, structure._near_upper, kernel, n)
    timings["nearfield_ms"] = 1e3 * (time.perf_counter() - t0)
    return CompressedKernelMatrix(structure, kernel, coupling, near_diag, near_upper, ridge, timings)


def assemble(
    points: PointSet,
    kernel,
    profile,
    q: float,
    eta: float = 0.5,
    leaf_size: Optional[int] = None,
    candidate_count: Optional[int] = None,
    seed: int = 0,
    ridge: float = 0.0,
    cache_dir: Optional[str] = None,
) -> CompressedKernelMatrix:
    """Tree, partition, Fekete scheme, bases, couplings and nearfield in one call.

    ``profile`` is an :class:`~dwfmm.weights.AnalyticityProfile` or a raw
    weight vector. The returned operator works in the tree ordering
    ``M.tree.points``.
    """
    omega = getattr(profile, "omega", profile)
    structure = build_structure(points, omega, q, eta, leaf_size, candidate_count, seed, cache_dir)
    return compress(structure, kernel, ridge)


def compression_error_estimate(M: CompressedKernelMatrix, kernel=None, ncols: int = 100, seed: int = 0):
    """Relative Frobenius error of ``ncols`` random columns of the compressed matrix.

    Returns ``(aggregate, per_column)`` with
    ``aggregate = sqrt(sum ||k_j - k~_j||^2) / sqrt(sum ||k_j||^2)``.
    """
    kernel = M.kernel if kernel is None else kernel
    n = M.structure.n
    ncols = min(ncols, n)
    cols = np.sort(np.random.default_rng(seed).choice(n, size=ncols, replace=False))
    coords = M.tree.points.coords
    exact = kernel.matrix(coords, coords[cols])
    E = np.zeros((n, ncols))
    E[cols, np.arange(ncols)] = 1.0
    approx = M.matvec(E, ridge=0.0)
    diff = np.linalg.norm(exact - approx, axis=0)
    norms = np.linalg.norm(exact, axis=0)
    return float(np.sqrt(np.sum(diff**2) / np.sum(norms**2))), diff / norms
