"""Dimension weights -> analyticity radii -> interpolation weights.

A data set living in the box ``[0, b_1] x ... x [0, b_d]`` is pulled back to
the unit cube. The transported kernel then extends analytically in direction
``k`` into a strip of half-width ``tau_k ~ 1 / (eta * b_k)``, which gives a
Bernstein-ellipse parameter ``rho_k = 2 tau_k + sqrt(1 + 4 tau_k^2)`` and the
index-set weight ``omega_k = log rho_k``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class AnalyticityProfile:
    tau: np.ndarray
    rho: np.ndarray
    omega: np.ndarray
    b: Optional[np.ndarray] = None
    eta: Optional[float] = None

    @property
    def dim(self) -> int:
        return len(self.omega)

    def to_dict(self) -> dict:
        return {
            "b": None if self.b is None else [float(v) for v in self.b],
            "tau": [float(v) for v in self.tau],
            "rho": [float(v) for v in self.rho],
            "omega": [float(v) for v in self.omega],
            "eta": self.eta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "AnalyticityProfile":
        b = data.get("b")
        return cls(
            tau=np.asarray(data["tau"], dtype=float),
            rho=np.asarray(data["rho"], dtype=float),
            omega=np.asarray(data["omega"], dtype=float),
            b=None if b is None else np.asarray(b, dtype=float),
            eta=data.get("eta"),
        )

    @classmethod
    def from_json(cls, text: str) -> "AnalyticityProfile":
        return cls.from_dict(json.loads(text))


def convergence_radius(tau) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    return 2.0 * tau + np.sqrt(1.0 + 4.0 * tau**2)


def _profile(tau: np.ndarray, normalize: bool, b=None, eta=None) -> AnalyticityProfile:
    raw = convergence_radius(tau)
    if normalize:
        # rho_k = e * raw_k / raw_1, i.e. omega_k = 1 + log(raw_k / raw_1); written in
        # log form so that omega_1 == 1 holds exactly
        omega = 1.0 + (np.log(raw) - np.log(raw[0]))
        rho = np.e * raw / raw[0]
    else:
        omega = np.log(raw)
        rho = raw
    return AnalyticityProfile(tau=tau, rho=rho, omega=omega, b=b, eta=eta)


def profile_from_dimension_weights(b, eta: float, normalize: bool = True) -> AnalyticityProfile:
    """Profile for data scaled by the (descending) box edge lengths ``b``.

    Uses ``tau_k = 1 / (eta * b_k)``. With ``normalize`` the radii are
    rescaled so that ``omega_1 = 1``.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.size == 0:
        raise ValueError("b must be a non-empty vector")
    if np.any(b <= 0.0):
        raise ValueError("dimension weights must be positive")
    if np.any(np.diff(b) > 0.0):
        raise ValueError("dimension weights must be sorted in descending order")
    if eta <= 0.0:
        raise ValueError("eta must be positive")
    tau = 1.0 / (eta * b)
    return _profile(tau, normalize, b=b, eta=float(eta))


def profile_from_tau(tau, normalize: bool = False) -> AnalyticityProfile:
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau.size == 0:
        raise ValueError("tau must be a non-empty vector")
    if np.any(tau <= 0.0):
        raise ValueError("analyticity radii must be positive")
    if np.any(np.diff(tau) < 0.0):
        raise ValueError("analyticity radii must be sorted in ascending order")
    return _profile(tau, normalize)


def truncation_dimension(b, tol: float) -> int:
    """Smallest ``d_t`` whose relative l1 tail ``sum_{k > d_t} b_k / sum_k b_k`` is <= ``tol``."""
    b = np.asarray(b, dtype=float)
    total = b.sum()
    # tails[m] = sum_{k >= m} b_k (0-based), so tails[d_t] is the dropped mass
    tails = np.concatenate([np.cumsum(b[::-1])[::-1], [0.0]])
    ok = np.nonzero(tails <= tol * total)[0]
    return int(ok[0]) if ok.size else b.size
