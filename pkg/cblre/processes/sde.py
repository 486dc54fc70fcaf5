"""
Euler integration of the branching equation with immigration, competition and a multiplicative
Lévy environment.

One step per environment cell, split as drift, diffusion, branching jumps, explosion, immigration,
then the environment factor. Replicates sharing an environment path are integrated together as
arrays.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from ..utils.errors import NumericalError, ValidationError
from .constants import (
    DEFAULT_EXPLOSION_CAP, DEFAULT_JUMP_CUT, SMALL_JUMP_MODES, STATUS_ABSORBED, STATUS_ALIVE,
    STATUS_EXPLODED_CAP, STATUS_EXPLODED_JUMP, STATUS_NAMES, SURVIVAL_THRESHOLD,
)
from .levy import LevyTriplet, sample_path
from .logging import log_numerical_event
from .mechanisms import BranchingMechanism, ImmigrationMechanism
from .montecarlo import MCAccumulator, SeedStream, as_generator, parallel_map, pooled_conditional, stream_accumulate

logger = logging.getLogger(__name__)

INF = math.inf


@dataclass(frozen=True)
class QuadraticCompetition:
    """β(z) = k z²."""

    k: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValidationError(f"competition k must be > 0, got {self.k}", key='beta.k')

    def __call__(self, z):
        return self.k * z * z

    def admissible(self):
        return True


@dataclass(frozen=True)
class TabulatedCompetition:
    """Piecewise-linear β through ``(points, values)``, extended linearly past the last point."""

    points: Tuple[float, ...]
    values: Tuple[float, ...]

    def __post_init__(self):
        if len(self.points) != len(self.values) or len(self.points) < 2:
            raise ValidationError("tabulated competition needs at least two (point, value) pairs", key='beta')
        if self.points[0] != 0 or self.values[0] != 0:
            raise ValidationError("tabulated competition must start at beta(0) = 0", key='beta')
        if np.any(np.diff(self.points) <= 0):
            raise ValidationError("tabulated competition points must increase", key='beta.points')
        if not self.admissible():
            raise ValidationError("tabulated competition must be non-decreasing", key='beta.values')

    def __call__(self, z):
        xs, ys = np.asarray(self.points), np.asarray(self.values)
        slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        z = np.asarray(z, dtype=float)
        return np.where(z > xs[-1], ys[-1] + slope * (z - xs[-1]), np.interp(z, xs, ys))

    def admissible(self):
        return bool(np.all(np.diff(self.values) >= 0))


@dataclass(frozen=True)
class CBLREConfig:
    z0: float
    mech: BranchingMechanism
    env: LevyTriplet
    horizon: float
    dt: float
    imm: Optional[ImmigrationMechanism] = None
    beta: Optional[object] = None
    jump_cut: float = DEFAULT_JUMP_CUT
    z_max: float = DEFAULT_EXPLOSION_CAP
    small_jump_mode: str = 'drift-only'

    def __post_init__(self):
        if not self.z0 >= 0:
            raise ValidationError(f"z0 must be >= 0, got {self.z0}", key='z0')
        if not 0 < self.jump_cut < 1:
            raise ValidationError(f"branching jump cut must lie in (0, 1), got {self.jump_cut}", key='numerics.jump_cut')
        if not self.z_max > self.z0:
            raise ValidationError(f"explosion cap must exceed z0, got {self.z_max}", key='numerics.z_max')
        if self.small_jump_mode not in SMALL_JUMP_MODES:
            raise ValidationError(
                f"small-jump mode must be one of {SMALL_JUMP_MODES}, got {self.small_jump_mode!r}",
                key='numerics.small_jumps')
        if not 0 < self.dt <= self.horizon:
            raise ValidationError(f"dt must lie in (0, T], got {self.dt}", key='dt')
        if self.env.variant == 'K':
            raise ValidationError("the integrator needs the environment S (or K0), not K", key='env.variant')
        if self.beta is not None and not self.beta.admissible():
            raise ValidationError("competition must be non-decreasing with beta(0) = 0", key='beta')

    @cached_property
    def coefficients(self):
        return SchemeCoefficients.build(self)

    @property
    def has_immigration(self):
        return self.imm is not None and not self.imm.trivial

    def sample_environment(self, seed=None):
        return sample_path(self.env, self.horizon, self.dt, seed)


@dataclass(frozen=True)
class SchemeCoefficients:
    """Per-unit-time quantities of the split scheme, computed once per configuration."""

    linear: float              # a minus the compensator of branching jumps in [cut, 1)
    constant: float            # d plus the mean of immigration jumps below the cut
    variance: float            # 2γ² plus the small-jump variance in gaussian-correction mode
    branch_rate: float         # μ([cut, ∞))
    kill_rate: float           # q
    immigration_rate: float    # ν([cut, ∞))
    small_jump_bias: float     # ∫_0^cut z² μ(dz), reported in drift-only mode

    @classmethod
    def build(cls, config):
        mech, cut = config.mech, config.jump_cut
        mu = mech.mu
        linear = mech.a
        variance = 2.0 * mech.gamma2
        branch_rate = small = 0.0
        if mu is not None:
            linear -= mu.first_moment(cut, 1.0, closed=(True, False))
            branch_rate = mu.mass(cut, INF, closed=(True, False))
            small = mu.second_moment(0.0, cut)
            if config.small_jump_mode == 'gaussian-correction':
                variance += small
        constant = 0.0
        immigration_rate = 0.0
        if config.imm is not None:
            constant = config.imm.d
            if config.imm.nu is not None:
                constant += config.imm.nu.first_moment(0.0, cut)
                immigration_rate = config.imm.nu.mass(cut, INF, closed=(True, False))
        if not all(math.isfinite(v) for v in (linear, constant, variance, branch_rate, immigration_rate)):
            raise ValidationError("scheme coefficients are not finite for this cut", key='numerics.jump_cut')
        return cls(linear, constant, variance, branch_rate, mech.q, immigration_rate, small)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    values: np.ndarray
    status: int
    event_time: float
    env_path: object = field(repr=False, default=None)

    @property
    def status_name(self):
        return STATUS_NAMES[self.status]

    @property
    def exploded(self):
        return self.status in (STATUS_EXPLODED_CAP, STATUS_EXPLODED_JUMP)

    @property
    def final(self):
        return float(self.values[-1])


@dataclass(frozen=True, eq=False)
class BatchResult:
    """Replicates sharing one environment path."""

    final: np.ndarray
    status: np.ndarray
    event_time: np.ndarray
    minimum: np.ndarray
    values: Optional[np.ndarray] = None


def _check_path(config, env_path):
    if env_path.variant == 'K':
        raise ValidationError("the integrator needs an S or K0 path, got K", key='env.variant')
    if abs(env_path.horizon - config.horizon) > 1e-12 * max(1.0, config.horizon):
        raise ValidationError(
            f"environment horizon {env_path.horizon} does not match config horizon {config.horizon}", key='T')


def simulate_batch(config, env_path, n, seed=None, record=False):
    """Integrates ``n`` replicates on ``env_path``; ``record`` keeps Z at every path time."""
    _check_path(config, env_path)
    rng = as_generator(seed)
    c = config.coefficients
    mech, imm, beta = config.mech, config.imm, config.beta
    cut = config.jump_cut
    immigration = config.has_immigration

    z = np.full(n, float(config.z0))
    status = np.where(z > 0, STATUS_ALIVE, STATUS_ABSORBED if not immigration else STATUS_ALIVE)
    event_time = np.where(status == STATUS_ABSORBED, 0.0, np.nan)
    minimum = z.copy()
    lengths = env_path.cell_lengths
    increments = env_path.cell_increments
    env_jumps = env_path.jump_increments
    history = np.empty((env_path.times.size, n)) if record else None
    if record:
        history[0] = z

    for i in range(lengths.size):
        h = lengths[i]
        t_end = env_path.times[i + 1]
        exploded = (status == STATUS_EXPLODED_CAP) | (status == STATUS_EXPLODED_JUMP)
        zl = np.where(exploded, 0.0, z)
        new = zl + (c.constant + c.linear * zl) * h
        if beta is not None:
            new -= beta(zl) * h
        if c.variance > 0:
            new += np.sqrt(c.variance * np.maximum(zl, 0.0) * h) * rng.standard_normal(n)
        if c.branch_rate > 0:
            counts = rng.poisson(zl * c.branch_rate * h)
            total = int(counts.sum())
            if total:
                sizes = mech.mu.sample(rng, total, lower=cut)
                new += np.bincount(np.repeat(np.arange(n), counts), weights=sizes, minlength=n)
        if c.kill_rate > 0:
            killed = (rng.poisson(zl * c.kill_rate * h) > 0) & ~exploded
            if killed.any():
                status[killed] = STATUS_EXPLODED_JUMP
                event_time[killed] = t_end
                exploded = exploded | killed
        if c.immigration_rate > 0:
            counts = rng.poisson(c.immigration_rate * h, n)
            total = int(counts.sum())
            if total:
                sizes = imm.nu.sample(rng, total, lower=cut)
                new += np.bincount(np.repeat(np.arange(n), counts), weights=sizes, minlength=n)
        new = np.maximum(new, 0.0)
        new *= math.exp(increments[i] + env_jumps[i + 1])
        if np.isnan(new).any():
            raise NumericalError("NaN in branching integrator", {'cell': i, 'time': float(t_end)})
        capped = (new > config.z_max) & ~exploded
        if capped.any():
            status[capped] = STATUS_EXPLODED_CAP
            event_time[capped] = t_end
            exploded = exploded | capped
            log_numerical_event('explosion_cap', f"{int(capped.sum())} replicates above {config.z_max} at t={t_end:.6g}",
                                severity='low')
        if not immigration:
            absorbed = (new == 0.0) & (status == STATUS_ALIVE)
            status[absorbed] = STATUS_ABSORBED
            event_time[absorbed] = t_end
        z = np.where(exploded, INF, new)
        minimum = np.minimum(minimum, z)
        if record:
            history[i + 1] = z

    return BatchResult(final=z, status=status, event_time=event_time, minimum=minimum, values=history)


def simulate(config, env_path, seed=None):
    """One trajectory on ``env_path``, recorded at every path time."""
    batch = simulate_batch(config, env_path, 1, seed, record=True)
    return Trajectory(
        times=env_path.times, values=batch.values[:, 0], status=int(batch.status[0]),
        event_time=float(batch.event_time[0]), env_path=env_path)


# -- reducers --------------------------------------------------------------------------------
class FinalValue:
    """Z_T (exploded replicates give inf)."""

    name = 'mean'

    def __call__(self, batch, env_path):
        return batch.final


class Survival:
    """Indicator of Z_T above a threshold; explosion counts as survival."""

    name = 'survival'

    def __init__(self, threshold=SURVIVAL_THRESHOLD):
        self.threshold = threshold

    def __call__(self, batch, env_path):
        return (batch.final > self.threshold).astype(float)


class LaplaceFunctional:
    """exp(-λ Z_T e^{-K_T}) with K = K0 + shift * t."""

    name = 'laplace'

    def __init__(self, lam, shift=0.0):
        self.lam = lam
        self.shift = shift

    def __call__(self, batch, env_path):
        k_terminal = env_path.terminal_value + self.shift * env_path.horizon
        with np.errstate(over='ignore', invalid='ignore'):
            out = np.exp(-self.lam * batch.final * math.exp(-k_terminal))
        return np.where(np.isinf(batch.final), 0.0, out)


REDUCERS = {'mean': FinalValue, 'survival': Survival, 'laplace': LaplaceFunctional}


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    per_env: list
    pooled: object
    env_paths: list = field(repr=False, default_factory=list)
    per_env_values: list = field(repr=False, default_factory=list)


def simulate_ensemble(config, n_env, n_branch, seeds, reducer, threads=1, env_paths=None, keep_paths=False):
    """
    Runs ``n_branch`` conditionally independent replicates on each of ``n_env`` environment paths.

    Environment ``i`` is drawn from the ``('env', i)`` stream and its replicates from the
    ``('branch', i)`` stream, so results do not depend on ``threads``.
    """
    if n_env < 1 or n_branch < 1:
        raise ValidationError("n_env and n_branch must be >= 1", key='mc')
    stream = seeds if isinstance(seeds, SeedStream) else SeedStream(seeds)

    def run_env(i):
        path = env_paths[i] if env_paths is not None else config.sample_environment(stream.generator('env', i))
        batch = simulate_batch(config, path, n_branch, stream.generator('branch', i))
        return path, np.asarray(reducer(batch, path), dtype=float)

    logger.info(f"Ensemble: {n_env} environments x {n_branch} replicates on {threads} threads")
    results = parallel_map(run_env, range(n_env), threads)
    values = [v for _, v in results]
    paths = [p for p, _ in results] if keep_paths else []
    if n_branch == 1:
        pooled = stream_accumulate(np.concatenate(values))
        return EnsembleResult(per_env=[], pooled=pooled, env_paths=paths, per_env_values=values)
    per_env = [MCAccumulator.from_values(v).estimate() for v in values]
    pooled = pooled_conditional(per_env) if n_env >= 2 else per_env[0]
    return EnsembleResult(per_env=per_env, pooled=pooled, env_paths=paths, per_env_values=values)
