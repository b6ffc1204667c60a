"""Synthetic benchmark data and point-set file formats."""

from __future__ import annotations

import csv
import struct

import numpy as np


def target_function(x: np.ndarray) -> np.ndarray:
    """``sin(4 pi ||x||) / (8 pi ||x||)``, equal to 1/2 at the origin."""
    r = np.linalg.norm(np.atleast_2d(x), axis=1)
    out = np.full(r.shape, 0.5)
    nz = r > 0
    out[nz] = np.sin(4.0 * np.pi * r[nz]) / (8.0 * np.pi * r[nz])
    return out


def dimension_weights(d: int, r: float) -> np.ndarray:
    if r <= 0:
        raise ValueError("decay exponent r must be positive")
    return np.arange(1, d + 1, dtype=float) ** (-r)


def generate_data(n: int, d: int, r: float, seed: int = 0):
    """Uniform samples in ``prod_k [0, k^-r]`` and their target values.

    Uses numpy's PCG64 generator; uniforms carry 53 random mantissa bits.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    x = rng.random((n, d)) * dimension_weights(d, r)
    return x, target_function(x)


def write_csv(path, x: np.ndarray, y=None, precision: int = 17) -> None:
    x = np.atleast_2d(x)
    header = [f"x{k + 1}" for k in range(x.shape[1])] + (["y"] if y is not None else [])
    fmt = f"{{:.{precision}g}}"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(x.shape[0]):
            row = [fmt.format(v) for v in x[i]]
            if y is not None:
                row.append(fmt.format(y[i]))
            w.writerow(row)


def read_csv(path):
    """Read ``x1,...,xd[,y]`` files; returns ``(x, y_or_None)``."""
    with open(path, newline="") as fh:
        header = next(csv.reader(fh))
    names = [h.strip() for h in header]
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: {data.shape[1]} columns but {len(names)} header names")
    if names[-1] == "y":
        return data[:, :-1], data[:, -1]
    return data, None


def write_binary(path, x: np.ndarray) -> None:
    x = np.ascontiguousarray(np.atleast_2d(x), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", *x.shape))
        fh.write(x.tobytes())


def read_binary(path) -> np.ndarray:
    with open(path, "rb") as fh:
        n, d = struct.unpack("<QQ", fh.read(16))
        x = np.frombuffer(fh.read(8 * n * d), dtype="<f8")
    if x.size != n * d:
        raise ValueError(f"{path}: truncated file, expected {n * d} values")
    return x.reshape(n, d).astype(float)


def load_points(path):
    if str(path).endswith((".bin", ".raw")):
        return read_binary(path), None
    return read_csv(path)
