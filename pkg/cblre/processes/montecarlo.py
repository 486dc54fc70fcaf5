"""
Monte Carlo estimation utilities: mergeable accumulators, pooled conditional estimates and
counter-based seed streams.
"""
import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..utils.errors import ValidationError

logger = logging.getLogger(__name__)

Z_95 = 1.959963984540054


@dataclass(frozen=True)
class MCEstimate:
    """Mean of ``n`` draws with its standard error; ``variance`` is the ddof=1 sample variance."""

    mean: float
    se: float
    n: int
    variance: float = math.nan
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def ci95(self):
        return (self.mean - Z_95 * self.se, self.mean + Z_95 * self.se)

    def within(self, value, k=3.0):
        """True when ``value`` lies within ``k`` standard errors of the mean."""
        return abs(self.mean - value) <= k * self.se

    def with_diagnostics(self, **details):
        merged = dict(self.diagnostics)
        merged.update(details)
        return MCEstimate(self.mean, self.se, self.n, self.variance, merged)


@dataclass(frozen=True)
class PooledEstimate(MCEstimate):
    """
    Estimate pooled over environments.

    ``se`` comes from the spread of the per-environment means, which accounts for both the
    environment and the branching randomness. ``within_se`` is the branching-only part.
    """

    n_env: int = 0
    within_variance: float = math.nan
    between_variance: float = math.nan
    within_se: float = math.nan

    @property
    def total_variance(self):
        return self.within_variance + self.between_variance


class MCAccumulator:
    """
    One-pass mean/variance accumulator (Welford update, Chan merge).

    Accumulators are values: ``merge`` returns a new accumulator and leaves both inputs untouched,
    so per-thread accumulators can be merged in index order.
    """

    __slots__ = ('n', 'mean', 'm2')

    def __init__(self, n=0, mean=0.0, m2=0.0):
        self.n = int(n)
        self.mean = float(mean)
        self.m2 = float(m2)

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            return cls()
        mean = float(values.mean())
        return cls(values.size, mean, float(np.sum((values - mean) ** 2)))

    def update(self, value):
        self.n += 1
        delta = value - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (value - self.mean)
        return self

    def update_batch(self, values):
        merged = self.merge(MCAccumulator.from_values(values))
        self.n, self.mean, self.m2 = merged.n, merged.mean, merged.m2
        return self

    def merge(self, other):
        if other.n == 0:
            return MCAccumulator(self.n, self.mean, self.m2)
        if self.n == 0:
            return MCAccumulator(other.n, other.mean, other.m2)
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return MCAccumulator(n, mean, m2)

    @property
    def variance(self):
        return self.m2 / (self.n - 1) if self.n > 1 else math.nan

    def estimate(self, **diagnostics):
        if self.n < 2:
            raise ValidationError(f"a standard error needs at least 2 values, got {self.n}")
        variance = max(self.variance, 0.0)
        return MCEstimate(self.mean, math.sqrt(variance / self.n), self.n, variance, diagnostics)


def stream_accumulate(values, chunk_size=65536):
    """Estimate from an iterable or array of draws, accumulated chunk by chunk."""
    if isinstance(values, np.ndarray):
        flat = values.ravel()
        acc = MCAccumulator()
        for start in range(0, flat.size, chunk_size):
            acc.update_batch(flat[start:start + chunk_size])
        return acc.estimate()
    acc = MCAccumulator()
    for value in values:
        acc.update(float(value))
    return acc.estimate()


def pooled_conditional(per_env_estimates):
    """
    Pools per-environment estimates by the law of total variance.

    Means are weighted by replicate counts, so the pooled mean equals the flat mean over every
    draw. Variances are population (ddof=0) variances, so ``total_variance`` equals the flat
    population variance of all draws.
    ``se`` adds the mean squared inner standard error to the spread of the environment means, both
    divided by the number of environments.
    """
    estimates = list(per_env_estimates)
    if len(estimates) < 2:
        raise ValidationError(f"pooling needs at least 2 environments, got {len(estimates)}")
    counts = np.array([e.n for e in estimates], dtype=float)
    means = np.array([e.mean for e in estimates], dtype=float)
    pop_vars = np.array([
        0.0 if e.n < 2 or math.isnan(e.variance) else e.variance * (e.n - 1) / e.n
        for e in estimates])
    total = counts.sum()
    mean = float(np.dot(counts, means) / total)
    within = float(np.dot(counts, pop_vars) / total)
    between = float(np.dot(counts, (means - mean) ** 2) / total)
    n_env = len(estimates)
    inner_se2 = np.array([0.0 if math.isnan(e.se) else e.se * e.se for e in estimates])
    se = math.sqrt(float(np.var(means, ddof=1)) / n_env + float(inner_se2.mean()) / n_env)
    sample_vars = np.array([0.0 if math.isnan(e.variance) else e.variance for e in estimates])
    within_se = math.sqrt(float(np.sum(sample_vars / counts))) / n_env
    return PooledEstimate(
        mean=mean, se=se, n=int(total), variance=within + between,
        n_env=n_env, within_variance=within, between_variance=between, within_se=within_se)


def _tag_key(tag):
    return int.from_bytes(hashlib.sha256(tag.encode('utf-8')).digest()[:8], 'big')


class SeedStream:
    """
    Counter-based seed derivation keyed on (master seed, module tag, env index, replicate index).

    The generator for a given key does not depend on the order in which keys are requested, so
    experiments reproduce under any parallel schedule.
    """

    def __init__(self, master):
        if master is None or int(master) < 0:
            raise ValidationError(f"master seed must be a non-negative integer, got {master!r}", key='seed')
        self.master = int(master)

    def sequence(self, tag, env=0, rep=0):
        return np.random.SeedSequence(entropy=self.master, spawn_key=(_tag_key(tag), int(env), int(rep)))

    def generator(self, tag, env=0, rep=0):
        return np.random.default_rng(self.sequence(tag, env, rep))

    def __repr__(self):
        return f"SeedStream({self.master})"


def as_generator(seed):
    """Accepts an int, a SeedSequence, a Generator or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def parallel_map(func, items, threads=1):
    """Maps ``func`` over ``items`` and returns results in input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug(f"Dispatching {len(items)} tasks on {threads} threads")
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))
