"""Kernel ridge regression on top of the compressed operator."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .geometry import PointSet, box_diam, compute_bounding_box, separation_radius
from .h2_matrix import CompressedKernelMatrix, build_structure, compress, compression_error_estimate

log = logging.getLogger(__name__)


@dataclass
class CGResult:
    """Per-column outcome of :func:`conjugate_gradient`.

    ``breakdown`` flags columns that met a search direction with
    non-positive curvature; ``stagnated`` flags columns stopped by the
    ``patience`` rule.
    """

    solution: np.ndarray
    iterations: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    breakdown: np.ndarray
    stagnated: np.ndarray
    history: list = field(default_factory=list)


def conjugate_gradient(
    apply: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    shifts=0.0,
    tol: float = 1e-6,
    max_iter: Optional[int] = None,
    patience: Optional[int] = None,
) -> CGResult:
    """Plain CG on ``(A + shift_j I) x_j = b_j`` for every column ``j`` at once.

    ``apply`` maps an ``(N, m)`` block to ``A`` times that block. Columns are
    independent CG runs sharing one operator application per iteration.
    A column stops when ``||r_j|| <= tol ||b_j||``, after ``max_iter``
    iterations (default ``N``), or, if ``patience`` is given, once its
    smallest residual so far has not improved for ``patience`` iterations.

    A direction with non-positive curvature means the shifted operator is
    not positive definite. The column is flagged and the usual update is
    kept (a negative step); an occasional such step does not prevent
    convergence, a persistently indefinite operator ends in stagnation.
    The returned iterate is the last one, not the best one.
    """
    b = np.asarray(b, dtype=float)
    single = b.ndim == 1
    B = b[:, None] if single else b
    n, m = B.shape
    shifts = np.broadcast_to(np.asarray(shifts, dtype=float), (m,)).copy()
    max_iter = n if max_iter is None else max_iter

    X = np.zeros_like(B)
    R = B.copy()
    P = R.copy()
    rr = np.einsum("ij,ij->j", R, R)
    bnorm = np.sqrt(rr)
    scale = np.where(bnorm > 0, bnorm, 1.0)
    target = tol * bnorm
    iters = np.zeros(m, dtype=np.int64)
    breakdown = np.zeros(m, dtype=bool)
    stagnated = np.zeros(m, dtype=bool)
    best = np.sqrt(rr) / scale
    since_best = np.zeros(m, dtype=np.int64)
    active = np.sqrt(rr) > target
    history = [np.sqrt(rr) / scale]
    it = 0
    while np.any(active) and it < max_iter:
        idx = np.nonzero(active)[0]
        Pa = P[:, idx]
        AP = apply(Pa) + shifts[idx] * Pa
        pAp = np.einsum("ij,ij->j", Pa, AP)
        if not np.all(np.isfinite(AP)) or not np.all(np.isfinite(pAp)):
            raise FloatingPointError(f"non-finite values in conjugate gradient iteration {it}")
        bad = pAp <= 0.0
        if np.any(bad):
            fresh = bad & ~breakdown[idx]
            if np.any(fresh):
                log.info("negative curvature at iteration %d for columns %s", it, idx[fresh].tolist())
            breakdown[idx[bad]] = True
            pAp = np.where(pAp == 0.0, -np.finfo(float).tiny, pAp)
        step = rr[idx] / pAp
        X[:, idx] += step * Pa
        R[:, idx] -= step * AP
        rr_new = np.einsum("ij,ij->j", R[:, idx], R[:, idx])
        P[:, idx] = R[:, idx] + (rr_new / rr[idx]) * Pa
        rr[idx] = rr_new
        iters[idx] += 1
        it += 1
        rel = np.sqrt(rr_new) / scale[idx]
        improved = rel < best[idx]
        best[idx] = np.minimum(best[idx], rel)
        since_best[idx] = np.where(improved, 0, since_best[idx] + 1)
        active[idx] = np.sqrt(rr_new) > target[idx]
        if patience is not None:
            stuck = active[idx] & (since_best[idx] >= patience)
            stagnated[idx[stuck]] = True
            active[idx[stuck]] = False
        history.append(np.sqrt(rr) / scale)
    residuals = np.sqrt(rr) / scale
    converged = residuals <= tol
    out = (X, iters, residuals, converged, breakdown, stagnated)
    if single:
        out = tuple(a[:, 0] if a.ndim == 2 else a[0] for a in out)
    return CGResult(*out, history=history)


@dataclass
class RidgeModel:
    """Coefficients in the original point ordering plus the training data."""

    alpha: np.ndarray
    ridge: float
    kernel: object
    training: PointSet
    iterations: int
    residual: float
    converged: bool
    breakdown: bool = False
    stagnated: bool = False

    def predict(self, test, chunk: int = 2048) -> np.ndarray:
        return predict(self, test, chunk)


def cg_solve(
    M: CompressedKernelMatrix,
    y: np.ndarray,
    ridge: float,
    tol: float = 1e-6,
    max_iter: Optional[int] = None,
    patience: Optional[int] = None,
) -> RidgeModel:
    """Solve ``(K~ + ridge I) alpha = y``; ``y`` is given in the original ordering."""
    if ridge < 0:
        raise ValueError("ridge parameter must be non-negative")
    pts = M.tree.points
    y_tree = pts.from_original_order(np.asarray(y, dtype=float))
    res = conjugate_gradient(lambda P: M.matvec(P, ridge=0.0), y_tree, ridge, tol, max_iter, patience)
    return RidgeModel(
        alpha=pts.to_original_order(res.solution),
        ridge=float(ridge),
        kernel=M.kernel,
        training=PointSet(pts.to_original_order(pts.coords)),
        iterations=int(res.iterations),
        residual=float(res.residuals),
        converged=bool(res.converged),
        breakdown=bool(res.breakdown),
        stagnated=bool(res.stagnated),
    )


def cg_solve_many(
    M: CompressedKernelMatrix, y, ridges: Sequence[float], tol=1e-6, max_iter=None, patience=None
) -> list:
    """One :class:`RidgeModel` per ridge value, solved as simultaneous CG runs."""
    pts = M.tree.points
    y_tree = pts.from_original_order(np.asarray(y, dtype=float))
    ridges = np.asarray(ridges, dtype=float)
    B = np.repeat(y_tree[:, None], ridges.size, axis=1)
    res = conjugate_gradient(lambda P: M.matvec(P, ridge=0.0), B, ridges, tol, max_iter, patience)
    training = PointSet(pts.to_original_order(pts.coords))
    return [
        RidgeModel(
            alpha=pts.to_original_order(res.solution[:, j]),
            ridge=float(ridges[j]),
            kernel=M.kernel,
            training=training,
            iterations=int(res.iterations[j]),
            residual=float(res.residuals[j]),
            converged=bool(res.converged[j]),
            breakdown=bool(res.breakdown[j]),
            stagnated=bool(res.stagnated[j]),
        )
        for j in range(ridges.size)
    ]


def predict(model: RidgeModel, test, chunk: int = 2048) -> np.ndarray:
    """Direct evaluation of ``s(x) = sum_j alpha_j k(x_j, x)``."""
    test = test.coords if isinstance(test, PointSet) else np.atleast_2d(np.asarray(test, dtype=float))
    train = model.training.coords
    if test.shape[1] != train.shape[1]:
        raise ValueError("test points have the wrong dimension")
    out = np.empty(test.shape[0])
    for start in range(0, test.shape[0], chunk):
        block = model.kernel.matrix(test[start : start + chunk], train)
        out[start : start + chunk] = block @ model.alpha
    return out


def prediction_error(pred, truth) -> float:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth lengths differ")
    scale = np.linalg.norm(truth)
    if scale == 0.0:
        raise ValueError("truth vector is zero")
    return float(np.linalg.norm(pred - truth) / scale)


def sigma_grid(points, count: int = 15, floor: float = 1e-5) -> np.ndarray:
    """Log-equispaced length scales on ``[max(floor, q_X), diam(B_X)]``."""
    qx, _ = separation_radius(points)
    lo = max(floor, qx)
    hi = box_diam(compute_bounding_box(points))
    return log_grid(lo, hi, count)


def log_grid(lo: float, hi: float, count: int) -> np.ndarray:
    if count == 1:
        return np.array([lo])
    grid = np.geomspace(lo, hi, count)
    grid[0], grid[-1] = lo, hi
    return grid


@dataclass
class GridSpec:
    sigmas: Sequence[float]
    ridges: Sequence[float]
    ncols: int = 100
    repetitions: int = 5
    pe_points: Optional[int] = None
    tol: float = 1e-6
    max_iter: Optional[int] = None
    patience: Optional[int] = 300
    seed: int = 0


def hyperparameter_grid(
    points: PointSet,
    values: np.ndarray,
    test_points: np.ndarray,
    test_values: np.ndarray,
    kernel,
    omega,
    q: float,
    grid: GridSpec,
    eta: float = 0.5,
    leaf_size: Optional[int] = None,
    candidate_count: Optional[int] = None,
    compute_ce: bool = True,
    progress: Optional[Callable[[dict], None]] = None,
) -> list:
    """Fit and score every ``(sigma, lambda)`` cell.

    The tree, partition and bases are built once; each sigma reassembles the
    kernel-dependent parts and all ridge values are solved together. Each of
    the ``repetitions`` draws a fresh column sample for CE and, when
    ``pe_points`` is set, a fresh test subsample for PE.
    """
    structure = build_structure(points, omega, q, eta, leaf_size, candidate_count, grid.seed)
    rng = np.random.default_rng(grid.seed)
    test_points = np.asarray(test_points, dtype=float)
    test_values = np.asarray(test_values, dtype=float)
    rows = []
    for sigma in grid.sigmas:
        k = kernel.with_sigma(float(sigma))
        t0 = time.perf_counter()
        M = compress(structure, k)
        ce = []
        if compute_ce:
            for _ in range(grid.repetitions):
                ce.append(compression_error_estimate(M, k, grid.ncols, int(rng.integers(2**31)))[0])
        models = cg_solve_many(M, values, grid.ridges, grid.tol, grid.max_iter, grid.patience)
        elapsed = 1e3 * (time.perf_counter() - t0)
        for model in models:
            full_pred = predict(model, test_points)
            pe = []
            for _ in range(grid.repetitions):
                if grid.pe_points is None or grid.pe_points >= len(test_values):
                    sel = slice(None)
                else:
                    sel = rng.choice(len(test_values), size=grid.pe_points, replace=False)
                pe.append(prediction_error(full_pred[sel], test_values[sel]))
            row = {
                "sigma": float(sigma),
                "lambda": model.ridge,
                "pe_mean": float(np.mean(pe)),
                "pe_std": float(np.std(pe)),
                "ce_mean": float(np.mean(ce)) if ce else float("nan"),
                "ce_std": float(np.std(ce)) if ce else float("nan"),
                "cg_iters": model.iterations,
                "cg_residual": model.residual,
                "converged": model.converged,
                "breakdown": model.breakdown,
                "stagnated": model.stagnated,
                "wall_ms": elapsed / len(models),
            }
            rows.append(row)
            if progress is not None:
                progress(row)
    return rows

