"""Seeded workload generators."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .io import read_instance
from .model import Instance


@dataclass(frozen=True)
class Uniform:
    mean_length: float
    mean_read: float


@dataclass(frozen=True)
class IidLogNormalExp:
    """Lengths ``exp(Normal(mu, v))`` (``v`` is the variance), read rates
    exponential with mean ``read_mean``.  ``truncate`` clips both at that
    quantile of their distribution when set."""

    mu: float
    v: float
    read_mean: float
    truncate: float | None = None

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("variance v must be non-negative")
        if not self.read_mean > 0:
            raise ValueError("read_mean must be positive")
        if self.truncate is not None and not 0 < self.truncate < 1:
            raise ValueError("truncation quantile must lie in (0, 1)")


@dataclass(frozen=True)
class FromFile:
    path: str


@dataclass(frozen=True)
class WorkloadSpec:
    kind: Uniform | IidLogNormalExp | FromFile
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")


def _streams(seed: int):
    # independent counter-based streams; prefixes do not depend on n
    ss = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(s)) for s in ss.spawn(2)]


def generate(spec: WorkloadSpec) -> Instance:
    kind, n = spec.kind, spec.n
    if isinstance(kind, Uniform):
        return Instance.uniform(kind.mean_length, kind.mean_read, n)
    if isinstance(kind, FromFile):
        inst = read_instance(Path(kind.path))
        return inst.truncate(n) if n and n < len(inst) else inst
    if isinstance(kind, IidLogNormalExp):
        g_len, g_read = _streams(spec.seed)
        sigma = np.sqrt(kind.v)
        lengths = np.exp(kind.mu + sigma * g_len.standard_normal(n))
        reads = g_read.exponential(kind.read_mean, n)
        if kind.truncate is not None:
            from scipy.stats import expon, lognorm

            q = kind.truncate
            lengths = np.minimum(lengths, lognorm.ppf(q, s=sigma, scale=np.exp(kind.mu)) if sigma > 0 else lengths)
            reads = np.minimum(reads, expon.ppf(q, scale=kind.read_mean))
        return Instance(lengths, reads)
    raise TypeError(f"unknown workload kind {kind!r}")


def empirical_means(instance: Instance) -> tuple[float, float]:
    if len(instance) == 0:
        raise ValueError("empirical means of an empty instance")
    return float(instance.lengths.mean()), float(instance.reads.mean())


def read_heavy_alpha(instance: Instance) -> float:
    """``max_t length_t / read_t`` (infinite if some read rate is zero)."""
    if len(instance) == 0:
        return 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(instance.lengths == 0, 0.0, instance.lengths / instance.reads)
    return float(ratio.max())


def lognormal_mean(mu: float, v: float) -> float:
    return float(np.exp(mu + v / 2))


__all__ = [
    "FromFile",
    "IidLogNormalExp",
    "Uniform",
    "WorkloadSpec",
    "empirical_means",
    "generate",
    "lognormal_mean",
    "read_heavy_alpha",
]
