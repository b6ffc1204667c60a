"""Experiment configuration shared by the CLI and the scripts."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Optional


@dataclass
class DataConfig:
    n: int = 2000
    d: int = 6
    r: float = 2.0
    seed: int = 0
    input_file: Optional[str] = None
    test_file: Optional[str] = None
    test_fraction: float = 0.1


@dataclass
class KernelConfig:
    family: str = "exponential"
    sigma: float = 0.3


@dataclass
class GridConfig:
    sigma_count: int = 15
    sigmas: Optional[list] = None
    lambda_count: int = 15
    lambdas: Optional[list] = None
    lambda_min: float = 1e-6
    lambda_max: float = 1e-1
    ncols: int = 100
    repetitions: int = 5
    pe_points: Optional[int] = None


@dataclass
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    kernel: KernelConfig = field(default_factory=KernelConfig)
    eta: float = 0.5
    q: float = 8.0
    leaf_size: Optional[int] = None
    normalize_weights: bool = True
    candidate_count: Optional[int] = None
    cg_tol: float = 1e-6
    grid: GridConfig = field(default_factory=GridConfig)
    output: Optional[str] = None

    def __post_init__(self):
        if self.data.r <= 0:
            raise ValueError("decay exponent r must be positive")
        if self.data.n < 1:
            raise ValueError("n must be positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        try:
            data = DataConfig(**raw.pop("data", {}))
            kernel = KernelConfig(**raw.pop("kernel", {}))
            grid = GridConfig(**raw.pop("grid", {}))
            return cls(data=data, kernel=kernel, grid=grid, **raw)
        except TypeError as exc:
            raise ValueError(f"invalid configuration: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_json(fh.read())
