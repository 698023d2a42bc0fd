"""Two concentric noisy n-spheres for binary classification."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NORM_FLOOR = 1e-12


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ShellConfig:
    n_d: int = 2
    m: int = 500
    r_inner: float = 0.2
    r_outer: float = 1.0
    sigma: float = 0.3
    rng_seed: int | None = None

    def validate(self) -> None:
        if self.n_d < 1:
            raise ConfigError("n_d must be >= 1")
        if self.m < 2:
            raise ConfigError("m must be >= 2")
        if not 0 < self.r_inner < self.r_outer:
            raise ConfigError("need 0 < r_inner < r_outer")
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0")


@dataclass
class ShellDataset:
    points: np.ndarray  # (m, n_d)
    labels: np.ndarray  # (m,), 0 = outer shell, 1 = inner shell

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_d(self) -> int:
        return self.points.shape[1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.n_d)] + ["label"])
            for x, y in zip(self.points, self.labels):
                w.writerow([repr(float(v)) for v in x] + [int(y)])

    @classmethod
    def from_csv(cls, path) -> "ShellDataset":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        data = np.array([[float(v) for v in r] for r in rows[1:]])
        return cls(data[:, :-1], data[:, -1].astype(np.int64))


def sample_sphere_point(n_d: int, r: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform point on the radius-``r`` sphere in ``n_d`` dimensions."""
    if r <= 0:
        raise ValueError("r must be positive")
    while True:
        v = rng.standard_normal(n_d)
        norm = np.linalg.norm(v)
        if norm >= NORM_FLOOR:
            return r * v / norm


def _shell(n: int, n_d: int, r: float, sigma: float, rng: np.random.Generator) -> np.ndarray:
    pts = np.array([sample_sphere_point(n_d, r, rng) for _ in range(n)]).reshape(n, n_d)
    if sigma > 0:
        pts = pts + rng.normal(0.0, sigma, size=pts.shape)
    return pts


def generate(config: ShellConfig) -> ShellDataset:
    """Outer shell (label 0) first, then inner shell (label 1).

    The outer shell gets ceil(m/2) points, the inner floor(m/2).
    """
    config.validate()
    rng = np.random.default_rng(config.rng_seed)
    n_outer = (config.m + 1) // 2
    n_inner = config.m // 2
    outer = _shell(n_outer, config.n_d, config.r_outer, config.sigma, rng)
    inner = _shell(n_inner, config.n_d, config.r_inner, config.sigma, rng)
    labels = np.concatenate([np.zeros(n_outer, np.int64), np.ones(n_inner, np.int64)])
    return ShellDataset(np.vstack([outer, inner]), labels)


def shuffle_split(dataset: ShellDataset, test_fraction: float = 0.2, seed=None):
    """Seeded shuffle followed by a head/tail split into (train, test)."""
    if not 0 <= test_fraction < 1:
        raise ValueError("test_fraction must be in [0, 1)")
    order = np.random.default_rng(seed).permutation(len(dataset))
    n_test = int(round(test_fraction * len(dataset)))
    test, train = order[:n_test], order[n_test:]
    return (ShellDataset(dataset.points[train], dataset.labels[train]),
            ShellDataset(dataset.points[test], dataset.labels[test]))
