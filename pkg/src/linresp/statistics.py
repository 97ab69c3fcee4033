"""Streaming mergeable moment accumulators and deterministic RNG streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class UndefinedVarianceError(ValueError):
    """Raised when finalizing an accumulator with fewer than 2 samples."""


@dataclass
class MeanVarAccumulator:
    """Welford one-pass mean/variance, mergeable across disjoint partitions."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, x: float):
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)
        return self

    def update_many(self, xs):
        xs = np.asarray(xs, dtype=float)
        if xs.size == 0:
            return self
        n_b = xs.size
        mean_b = float(xs.mean())
        m2_b = float(np.sum((xs - mean_b) ** 2))
        return self._merge_parts(n_b, mean_b, m2_b)

    def _merge_parts(self, n_b, mean_b, m2_b):
        n_a = self.count
        n = n_a + n_b
        delta = mean_b - self.mean
        self.mean += delta * n_b / n
        self.m2 += m2_b + delta * delta * n_a * n_b / n
        self.count = n
        return self

    def merge(self, other: "MeanVarAccumulator"):
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
            return self
        return self._merge_parts(other.count, other.mean, other.m2)

    def finalize(self):
        """Returns (mean, unbiased variance, stderr of the mean)."""
        if self.count < 2:
            raise UndefinedVarianceError("need at least 2 samples")
        var = self.m2 / (self.count - 1)
        return self.mean, var, np.sqrt(var / self.count)


@dataclass
class CovAccumulator:
    """One-pass covariance of paired samples, mergeable."""

    count: int = 0
    mean_x: float = 0.0
    mean_y: float = 0.0
    c2: float = 0.0
    m2_x: float = 0.0
    m2_y: float = 0.0

    def update(self, x: float, y: float):
        self.count += 1
        dx = x - self.mean_x
        dy = y - self.mean_y
        self.mean_x += dx / self.count
        self.mean_y += dy / self.count
        self.c2 += dx * (y - self.mean_y)
        self.m2_x += dx * (x - self.mean_x)
        self.m2_y += dy * (y - self.mean_y)
        return self

    def merge(self, other: "CovAccumulator"):
        if other.count == 0:
            return self
        if self.count == 0:
            for f in ("count", "mean_x", "mean_y", "c2", "m2_x", "m2_y"):
                setattr(self, f, getattr(other, f))
            return self
        n_a, n_b = self.count, other.count
        n = n_a + n_b
        dx = other.mean_x - self.mean_x
        dy = other.mean_y - self.mean_y
        self.c2 += other.c2 + dx * dy * n_a * n_b / n
        self.m2_x += other.m2_x + dx * dx * n_a * n_b / n
        self.m2_y += other.m2_y + dy * dy * n_a * n_b / n
        self.mean_x += dx * n_b / n
        self.mean_y += dy * n_b / n
        self.count = n
        return self

    def finalize(self):
        """Returns the unbiased sample covariance (divisor count-1)."""
        if self.count < 2:
            raise UndefinedVarianceError("need at least 2 samples")
        return self.c2 / (self.count - 1)


def covariance_with_stderr(x, y):
    """Sample covariance of paired arrays and the standard error of the
    centered products (x_i - xbar)(y_i - ybar)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 2:
        raise UndefinedVarianceError("need at least 2 samples")
    prod = (x - x.mean()) * (y - y.mean())
    cov = prod.sum() / (n - 1)
    stderr = prod.std(ddof=1) / np.sqrt(n)
    return cov, stderr


@dataclass(frozen=True)
class StreamSpec:
    """Identifies one reproducible random stream."""

    master_seed: int
    stream_index: int = 0


def derive_stream(spec: StreamSpec) -> np.random.Generator:
    """Deterministic, statistically independent stream per (seed, index).

    Uses numpy SeedSequence (an avalanche-quality integer hash) feeding a
    PCG64 generator; Gaussian draws use numpy's ziggurat method.  Same spec
    always yields the same draws within one numpy version.
    """
    ss = np.random.SeedSequence(spec.master_seed,
                                spawn_key=(spec.stream_index,))
    return np.random.Generator(np.random.PCG64(ss))
