"""Radial kernel families."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

FAMILIES = ("exponential", "gaussian", "inverse_multiquadric")


@dataclass(frozen=True)
class KernelSpec:
    """A radial kernel ``k(x, y) = phi(||x - y||_2 / sigma)``.

    ``smoothness`` optionally records the asymptotic smoothness constants
    ``(c_kappa, rho)``; they are metadata only.
    """

    family: str = "exponential"
    sigma: float = 1.0
    smoothness: Optional[tuple] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; choose from {FAMILIES}")
        if not self.sigma > 0:
            raise ValueError("length scale sigma must be positive")

    def from_distance(self, r: np.ndarray) -> np.ndarray:
        s = np.asarray(r) / self.sigma
        if self.family == "exponential":
            return np.exp(-s)
        if self.family == "gaussian":
            return np.exp(-s * s)
        return 1.0 / np.sqrt(1.0 + s * s)

    def __call__(self, x, y) -> float:
        return kernel_eval(self, x, y)

    def matrix(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Dense kernel block ``[k(x_i, y_j)]``."""
        return self.from_distance(cdist(np.atleast_2d(x), np.atleast_2d(y)))

    def with_sigma(self, sigma: float) -> "KernelSpec":
        return KernelSpec(self.family, sigma, self.smoothness)


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    return float(spec.from_distance(np.linalg.norm(x - y)))


def transported_eval(spec: KernelSpec, b, xhat, yhat) -> float:
    """Kernel on the unit cube after scaling both arguments by ``diag(b)``."""
    b = np.asarray(b, dtype=float)
    return kernel_eval(spec, b * np.asarray(xhat), b * np.asarray(yhat))
