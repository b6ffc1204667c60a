"""Compression and prediction errors over a (sigma, lambda) grid.

Scaled-down version of the synthetic regression benchmark: uniform samples
in prod_k [0, k^-r], targets sin(4 pi |x|) / (8 pi |x|), exponential
kernel, sigma log-spaced on [max(1e-5, q_X), diam] and lambda on
[1e-6, 1e-1]. Defaults reproduce the acceptance setup (N = 10000, d = 10,
q = 6); pass --n 100000 --d 20 --q 8 for the full-size run given enough
memory and time.

    python3 scripts/accuracy_benchmark.py --out grid_r2.csv
"""

import argparse
import csv
import time

from dwfmm.data import dimension_weights, generate_data
from dwfmm.geometry import PointSet
from dwfmm.kernels import KernelSpec
from dwfmm.solver import GridSpec, hyperparameter_grid, log_grid, sigma_grid
from dwfmm.weights import profile_from_dimension_weights

COLUMNS = [
    "sigma", "lambda", "pe_mean", "pe_std", "ce_mean", "ce_std",
    "cg_iters", "cg_residual", "converged", "breakdown", "stagnated", "wall_ms",
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--n-test", type=int, default=10_000)
    ap.add_argument("--pe-points", type=int, default=1000, help="test points drawn per PE repetition")
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--r", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=6)
    ap.add_argument("--eta", type=float, default=0.5)
    ap.add_argument("--sigma-count", type=int, default=15)
    ap.add_argument("--lambda-count", type=int, default=15)
    ap.add_argument("--ncols", type=int, default=100)
    ap.add_argument("--repetitions", type=int, default=5)
    ap.add_argument("--patience", type=int, default=300)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="grid.csv")
    args = ap.parse_args()

    x, y = generate_data(args.n, args.d, args.r, args.seed)
    xt, yt = generate_data(args.n_test, args.d, args.r, args.seed + 1)
    omega = profile_from_dimension_weights(dimension_weights(args.d, args.r), args.eta).omega
    grid = GridSpec(
        sigma_grid(x, args.sigma_count),
        log_grid(1e-6, 1e-1, args.lambda_count),
        ncols=args.ncols,
        repetitions=args.repetitions,
        pe_points=args.pe_points,
        patience=args.patience,
        seed=args.seed,
    )
    t0 = time.perf_counter()
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)

        def emit(row):
            w.writerow([f"{row[c]:.9g}" if isinstance(row[c], float) else row[c] for c in COLUMNS])
            fh.flush()
            print(
                f"[{time.perf_counter() - t0:7.1f}s] sigma={row['sigma']:.3e} lambda={row['lambda']:.1e} "
                f"PE={row['pe_mean']:.3e} CE={row['ce_mean']:.3e} iters={row['cg_iters']} "
                f"converged={row['converged']}"
            )

        hyperparameter_grid(PointSet(x), y, xt, yt, KernelSpec("exponential"), omega, args.q, grid, args.eta, progress=emit)


if __name__ == "__main__":
    main()
