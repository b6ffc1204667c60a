"""Command-line entry point.

Run ``python3 -m dwfmm <subcommand> --help`` for the options of each
subcommand. Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import sys
import time
import warnings

import numpy as np

from .block_partition import build_partition
from .cluster_tree import build_tree
from .config import ExperimentConfig
from .data import dimension_weights, generate_data, load_points, write_binary, write_csv
from .geometry import PointSet, compute_bounding_box
from .h2_matrix import build_structure, compress, compression_error_estimate, default_leaf_size
from .index_set import enumerate_indices, index_set_size, tdi_count, tpi_count
from .kernels import FAMILIES, KernelSpec
from .poly import SchemeError, cached_fekete, lebesgue_estimate
from .solver import (
    GridSpec,
    RidgeModel,
    cg_solve,
    hyperparameter_grid,
    log_grid,
    predict,
    prediction_error,
    sigma_grid,
)
from .weights import profile_from_dimension_weights, profile_from_tau

log = logging.getLogger("dwfmm")

DENSE_LIMIT = 5000
GRID_COLUMNS = ["sigma", "lambda", "pe_mean", "pe_std", "ce_mean", "ce_std", "cg_iters", "wall_ms"]


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def _write_rows(rows, columns, path=None) -> None:
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    finally:
        if path:
            fh.close()


def _emit_json(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, default=_json_default)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")


# --- configuration -----------------------------------------------------------


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {
        ("data", "n"): args.n,
        ("data", "d"): args.d,
        ("data", "r"): args.r,
        ("data", "seed"): args.seed,
        ("data", "input_file"): args.input,
        ("data", "test_file"): args.test_file,
        ("kernel", "family"): args.kernel,
        ("kernel", "sigma"): args.sigma,
        (None, "eta"): args.eta,
        (None, "q"): args.q,
        (None, "leaf_size"): args.leaf_size,
        (None, "candidate_count"): args.candidate_count,
        (None, "output"): args.output,
    }
    for (section, name), value in overrides.items():
        if value is None:
            continue
        setattr(getattr(cfg, section) if section else cfg, name, value)
    if args.raw_weights:
        cfg.normalize_weights = False
    cfg.__post_init__()
    return cfg


def _dataset(cfg: ExperimentConfig):
    if cfg.data.input_file:
        x, y = load_points(cfg.data.input_file)
        return x, y
    return generate_data(cfg.data.n, cfg.data.d, cfg.data.r, cfg.data.seed)


def _split(cfg: ExperimentConfig, x, y):
    """Training/held-out split: the test file if given, else a seeded random fraction."""
    if cfg.data.test_file:
        xt, yt = load_points(cfg.data.test_file)
        return x, y, xt, yt
    n_test = int(round(cfg.data.test_fraction * len(x)))
    if n_test == 0:
        return x, y, x[:0], None if y is None else y[:0]
    perm = np.random.default_rng(cfg.data.seed).permutation(len(x))
    test, train = perm[:n_test], perm[n_test:]
    return x[train], None if y is None else y[train], x[test], None if y is None else y[test]


def _omega(args, cfg: ExperimentConfig, x) -> np.ndarray:
    """Index-set weights: from a file, from the decay law, or from the data extent."""
    if args.weights not in (None, "auto"):
        omega = np.loadtxt(args.weights, delimiter=",", ndmin=1).ravel()
        if omega.size != x.shape[1]:
            raise UsageError(f"weights file has {omega.size} values, data has {x.shape[1]} dimensions")
        return omega
    if cfg.data.input_file:
        b = compute_bounding_box(x).edges
        if np.any(np.diff(b) > 0) or np.any(b <= 0):
            raise UsageError(
                "automatic weights need coordinates ordered by decreasing extent; "
                "reorder the columns or pass --weights FILE"
            )
    else:
        b = dimension_weights(cfg.data.d, cfg.data.r)
    return profile_from_dimension_weights(b, cfg.eta, cfg.normalize_weights).omega


def _kernel(cfg: ExperimentConfig) -> KernelSpec:
    return KernelSpec(cfg.kernel.family, cfg.kernel.sigma)


def _structure(args, cfg, x):
    return build_structure(
        PointSet(x), _omega(args, cfg, x), cfg.q, cfg.eta, cfg.leaf_size, cfg.candidate_count,
        cfg.data.seed, args.cache_dir,
    )


# --- subcommands -------------------------------------------------------------


def cmd_gen(args, cfg):
    x, y = generate_data(cfg.data.n, cfg.data.d, cfg.data.r, cfg.data.seed)
    path = cfg.output
    if path is None:
        raise UsageError("gen needs --output")
    if path.endswith((".bin", ".raw")):
        write_binary(path, x)
    else:
        write_csv(path, x, y)
    log.info("wrote %d points in %d dimensions to %s", len(x), x.shape[1], path)


def counts_rows(d_max: int, q_max: int, rs):
    rows = []
    for r in rs:
        for d in range(1, d_max + 1):
            tau = np.arange(1, d + 1, dtype=float) ** r
            norm = profile_from_tau(tau, normalize=True).omega
            raw = profile_from_tau(tau, normalize=False).omega
            for q in range(q_max + 1):
                rows.append(
                    {
                        "d": d,
                        "q": q,
                        "r": r,
                        "tpi": tpi_count(q, d),
                        "tdi": tdi_count(q, d),
                        "wtdi_normalized": index_set_size(norm, q),
                        "wtdi_raw": index_set_size(raw, q),
                    }
                )
    return rows


def cmd_counts(args, cfg):
    rs = args.decay if args.decay else [cfg.data.r]
    rows = counts_rows(args.d_max, args.q_max, rs)
    _write_rows(rows, ["d", "q", "r", "tpi", "tdi", "wtdi_normalized", "wtdi_raw"], cfg.output)


def cmd_fekete(args, cfg):
    b = dimension_weights(cfg.data.d, cfg.data.r)
    omega = profile_from_dimension_weights(b, cfg.eta, cfg.normalize_weights).omega
    index_set = enumerate_indices(omega, cfg.q)
    scheme = cached_fekete(index_set, cfg.candidate_count, cfg.data.seed, args.cache_dir)
    report = {
        "d": cfg.data.d,
        "q": cfg.q,
        "n_lambda": scheme.size,
        "condition_estimate": scheme.condition_estimate,
        "lebesgue_estimate": lebesgue_estimate(scheme),
    }
    if cfg.output:
        write_csv(cfg.output, scheme.nodes, precision=9)
    _emit_json(report)


def cmd_tree(args, cfg):
    x, _ = _dataset(cfg)
    leaf = cfg.leaf_size
    if leaf is None:
        leaf = default_leaf_size(len(enumerate_indices(_omega(args, cfg, x), cfg.q)))
    _emit_json(build_tree(PointSet(x), leaf).stats(), cfg.output)


def cmd_partition(args, cfg):
    x, _ = _dataset(cfg)
    n_lambda = len(enumerate_indices(_omega(args, cfg, x), cfg.q))
    leaf = cfg.leaf_size or default_leaf_size(n_lambda)
    tree = build_tree(PointSet(x), leaf)
    _emit_json(build_partition(tree, cfg.eta).stats(tree, n_lambda), cfg.output)


def cmd_build(args, cfg):
    x, _ = _dataset(cfg)
    M = compress(_structure(args, cfg, x), _kernel(cfg))
    s = M.stats()
    keys = ["n_blocks_far", "n_blocks_near", "n_lambda", "mem_bytes", "assembly_ms"]
    out = {k: s[k] for k in keys}
    out.update({k: v for k, v in s.items() if k not in out})
    _emit_json(out, cfg.output)


def bench_report(x, kernel, omega, q, eta=0.5, leaf_size=None, candidate_count=None, seed=0, repeats=3):
    """Dense versus compressed matvec: timings and relative error."""
    pts = PointSet(x)
    t0 = time.perf_counter()
    structure = build_structure(pts, omega, q, eta, leaf_size, candidate_count, seed)
    M = compress(structure, kernel)
    report = {"n": len(x), "d": x.shape[1], "q": q, "n_lambda": M.scheme.size}
    report["h2_assembly_ms"] = 1e3 * (time.perf_counter() - t0)
    v = np.random.default_rng(seed).random(len(x))
    t0 = time.perf_counter()
    for _ in range(repeats):
        y = M.matvec(v)
    report["h2_matvec_ms"] = 1e3 * (time.perf_counter() - t0) / repeats
    report["mem_bytes"] = M.stats()["mem_bytes"]
    if len(x) > DENSE_LIMIT:
        warnings.warn(f"n={len(x)} exceeds {DENSE_LIMIT}; dense oracle skipped", stacklevel=2)
        report["rel_error"] = None
        return report
    c = M.tree.points.coords
    t0 = time.perf_counter()
    K = kernel.matrix(c, c)
    report["dense_build_ms"] = 1e3 * (time.perf_counter() - t0)
    t0 = time.perf_counter()
    for _ in range(repeats):
        ref = K @ v
    report["dense_matvec_ms"] = 1e3 * (time.perf_counter() - t0) / repeats
    report["rel_error"] = float(np.linalg.norm(y - ref) / np.linalg.norm(ref))
    return report


def cmd_bench(args, cfg):
    x, _ = _dataset(cfg)
    qs = args.q_sweep or [cfg.q]
    reports = [
        bench_report(x, _kernel(cfg), _omega(args, cfg, x), q, cfg.eta, cfg.leaf_size, cfg.candidate_count, cfg.data.seed)
        for q in qs
    ]
    _emit_json(reports[0] if len(reports) == 1 else reports, cfg.output)


def _sigmas(cfg, x):
    if cfg.grid.sigmas:
        return np.asarray(cfg.grid.sigmas, dtype=float)
    return sigma_grid(x, cfg.grid.sigma_count)


def _ridges(cfg):
    if cfg.grid.lambdas:
        return np.asarray(cfg.grid.lambdas, dtype=float)
    return log_grid(cfg.grid.lambda_min, cfg.grid.lambda_max, cfg.grid.lambda_count)


def cmd_compress_error(args, cfg):
    x, _ = _dataset(cfg)
    structure = _structure(args, cfg, x)
    rng = np.random.default_rng(cfg.data.seed)
    rows = []
    for sigma in _sigmas(cfg, x):
        M = compress(structure, _kernel(cfg).with_sigma(float(sigma)))
        ce = [
            compression_error_estimate(M, ncols=cfg.grid.ncols, seed=int(rng.integers(2**31)))[0]
            for _ in range(cfg.grid.repetitions)
        ]
        rows.append({"sigma": sigma, "ce_mean": np.mean(ce), "ce_std": np.std(ce)})
    _write_rows(rows, ["sigma", "ce_mean", "ce_std"], cfg.output)


def save_model(path, model: RidgeModel) -> None:
    np.savez(
        path,
        alpha=model.alpha,
        training=model.training.coords,
        ridge=model.ridge,
        family=model.kernel.family,
        sigma=model.kernel.sigma,
        iterations=model.iterations,
        residual=model.residual,
        converged=model.converged,
    )


def load_model(path) -> RidgeModel:
    with np.load(path) as f:
        return RidgeModel(
            alpha=f["alpha"],
            ridge=float(f["ridge"]),
            kernel=KernelSpec(str(f["family"]), float(f["sigma"])),
            training=PointSet(f["training"]),
            iterations=int(f["iterations"]),
            residual=float(f["residual"]),
            converged=bool(f["converged"]),
        )


def cmd_fit(args, cfg):
    x, y = _dataset(cfg)
    if y is None:
        raise UsageError("fit needs target values (a 'y' column)")
    xtr, ytr, xte, yte = _split(cfg, x, y)
    M = compress(_structure(args, cfg, xtr), _kernel(cfg))
    model = cg_solve(M, ytr, args.ridge, cfg.cg_tol, args.max_iter)
    report = {
        "n_train": len(xtr),
        "ridge": model.ridge,
        "iterations": model.iterations,
        "residual": model.residual,
        "converged": model.converged,
    }
    if yte is not None and len(yte):
        report["n_test"] = len(yte)
        report["pe"] = prediction_error(predict(model, xte), yte)
    if cfg.output:
        save_model(cfg.output, model)
    _emit_json(report)
    if not model.converged:
        raise NumericalFailure(f"CG did not converge: residual {model.residual:.3e} after {model.iterations} iterations")


def cmd_predict(args, cfg):
    if not args.model:
        raise UsageError("predict needs --model")
    if not cfg.data.input_file:
        raise UsageError("predict needs --input")
    model = load_model(args.model)
    x, y = load_points(cfg.data.input_file)
    pred = predict(model, x)
    rows = [{"prediction": p} for p in pred]
    _write_rows(rows, ["prediction"], cfg.output)
    if y is not None:
        print(json.dumps({"pe": prediction_error(pred, y)}), file=sys.stderr)


def cmd_grid(args, cfg):
    x, y = _dataset(cfg)
    if y is None:
        raise UsageError("grid needs target values (a 'y' column)")
    xtr, ytr, xte, yte = _split(cfg, x, y)
    if not len(yte):
        raise UsageError("grid needs held-out points: set test_fraction > 0 or pass --test-file")
    spec = GridSpec(
        sigmas=_sigmas(cfg, xtr),
        ridges=_ridges(cfg),
        ncols=cfg.grid.ncols,
        repetitions=cfg.grid.repetitions,
        pe_points=cfg.grid.pe_points,
        tol=cfg.cg_tol,
        max_iter=args.max_iter,
        patience=args.patience,
        seed=cfg.data.seed,
    )
    rows = hyperparameter_grid(
        PointSet(xtr), ytr, xte, yte, _kernel(cfg), _omega(args, cfg, xtr), cfg.q, spec,
        cfg.eta, cfg.leaf_size, cfg.candidate_count,
        progress=lambda r: log.info("sigma=%.3g lambda=%.3g pe=%.3e", r["sigma"], r["lambda"], r["pe_mean"]),
    )
    columns = GRID_COLUMNS + (["converged"] if args.verbose else [])
    _write_rows(rows, columns, cfg.output)


COMMANDS = {
    "gen": (cmd_gen, "generate the synthetic benchmark data set"),
    "counts": (cmd_counts, "TPI/TDI/WTDI interpolation point counts"),
    "fekete": (cmd_fekete, "approximate Fekete nodes and their quality"),
    "tree": (cmd_tree, "cluster tree statistics"),
    "partition": (cmd_partition, "block partition statistics"),
    "build": (cmd_build, "assemble the compressed matrix and report its size"),
    "bench": (cmd_bench, "compressed versus dense matvec"),
    "compress-error": (cmd_compress_error, "compression error over a sigma grid"),
    "fit": (cmd_fit, "kernel ridge regression fit"),
    "predict": (cmd_predict, "evaluate a saved model"),
    "grid": (cmd_grid, "sigma x lambda hyperparameter grid"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help="JSON experiment configuration")
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int, help="cap on BLAS worker threads")
    g.add_argument("--n", type=int, help="number of synthetic points")
    g.add_argument("--d", type=int, help="dimension of synthetic points")
    g.add_argument("--r", type=float, help="decay exponent of the box edges k^-r")
    g.add_argument("--input", help="point file (.csv with optional y column, or .bin)")
    g.add_argument("--test-file", help="held-out point file; overrides the random split")
    g.add_argument("--kernel", choices=FAMILIES)
    g.add_argument("--sigma", type=float)
    g.add_argument("--eta", type=float)
    g.add_argument("--q", type=float)
    g.add_argument("--leaf-size", type=int)
    g.add_argument("--candidate-count", type=int)
    g.add_argument("--weights", help="'auto' or a file with one index-set weight per dimension")
    g.add_argument("--raw-weights", action="store_true", help="use log(rho_k) without the omega_1 = 1 shift")
    g.add_argument("--cache-dir", help="directory for cached Fekete nodes")
    g.add_argument("-o", "--output")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dwfmm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {name: sub.add_parser(name, parents=[common], help=text) for name, (_, text) in COMMANDS.items()}
    subs["counts"].add_argument("--d-max", type=int, default=20)
    subs["counts"].add_argument("--q-max", type=int, default=10)
    subs["counts"].add_argument("--decay", type=float, nargs="+", help="one or more exponents r, tau_k = k^r")
    subs["bench"].add_argument("--q-sweep", type=float, nargs="+")
    subs["fit"].add_argument("--ridge", type=float, default=1e-3)
    for name in ("fit", "grid"):
        subs[name].add_argument("--max-iter", type=int)
    subs["grid"].add_argument("--patience", type=int, default=300)
    subs["predict"].add_argument("--model")
    return parser


def _thread_limit(n):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config(args)
        with _thread_limit(args.threads):
            COMMANDS[args.command][0](args, cfg)
    except (UsageError, FileNotFoundError, ValueError) as exc:
        print(f"dwfmm {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, SchemeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"dwfmm {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
