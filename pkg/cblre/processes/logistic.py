"""
Logistic branching in a Lévy environment: ψ(λ) = -aλ, β(z) = k z².

Given a path of K (K = K⁰ + a t) the solution is explicit,

    Z_t = z e^{K_t} / (1 + k z ∫₀^t e^{K_s} ds),

which gives stationary moments, time averages and first-passage transforms without discretizing Z.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from ..utils.errors import DomainError, ValidationError
from .constants import STATUS_ALIVE, TAIL_RELATIVE_TOL
from .levy import (
    cell_log_ratio, cumulative_log_exp_functional, esscher_kappa, esscher_tilt, laplace_exponents,
    log_exp_functional, sample_path,
)
from .logging import log_numerical_event
from .mechanisms import feller
from .montecarlo import MCAccumulator, MCEstimate, SeedStream
from .sde import CBLREConfig, QuadraticCompetition, Trajectory, simulate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LogisticConfig:
    """``env`` is the triplet of K (variant K, ψ'(0+) = -a)."""

    z0: float
    a: float
    k: float
    env: object
    horizon: float = 1.0
    dt: float = 0.01

    def __post_init__(self):
        if not self.z0 > 0:
            raise ValidationError("logistic.z0 must be > 0", key='logistic.z0')
        if not self.k > 0:
            raise ValidationError("logistic.k must be > 0", key='logistic.k')
        if self.env.variant != 'K':
            raise ValidationError("logistic environment must be the K process", key='env.variant')

    @property
    def k0_triplet(self):
        """Triplet of K⁰ = K - a t, the environment seen by the integrator."""
        return replace(self.env, drift=self.env.drift - self.a, variant='K0', psi_prime0=None)

    def sde_config(self, dt=None):
        return CBLREConfig(
            z0=self.z0, mech=feller(a=self.a, gamma2=0.0), env=self.k0_triplet,
            horizon=self.horizon, dt=dt or self.dt, beta=QuadraticCompetition(self.k))

    def sample_k_path(self, seed=None):
        return sample_path(self.env, self.horizon, self.dt, seed)


def _require_k(path):
    if path.variant != 'K':
        raise ValidationError(f"logistic formulas need a K path, got {path.variant}", key='env.variant')


def _log_solution(path, z0, k):
    log_i = cumulative_log_exp_functional(path, 1)
    log_denominator = np.logaddexp(0.0, math.log(k * z0) + log_i)
    return math.log(z0) + path.values - log_denominator, log_i


def exact_solution(path_k, z0, k):
    """The explicit solution on the path grid, as a Trajectory."""
    _require_k(path_k)
    if not (z0 > 0 and k > 0):
        raise ValidationError("exact solution needs z0 > 0 and k > 0", key='logistic')
    log_z, _ = _log_solution(path_k, z0, k)
    return Trajectory(times=path_k.times, values=np.exp(log_z), status=STATUS_ALIVE,
                      event_time=math.nan, env_path=path_k)


def stationary_moment(env_triplet_k, k, n):
    """E[Z_∞^n] = k^{-n} ψ'_K(0+) ψ_K(1) ⋯ ψ_K(n-1) / (n-1)!."""
    if n < 1 or int(n) != n:
        raise ValidationError(f"moment order must be a positive integer, got {n}", key='n')
    if not k > 0:
        raise ValidationError("logistic.k must be > 0", key='logistic.k')
    mean = env_triplet_k.mean()
    if not mean > 0:
        raise DomainError(f"stationary moments need K drifting to +inf, E[K_1] = {mean}")
    for j in range(1, int(n)):
        if not env_triplet_k.in_domain(j):
            raise DomainError(f"E[exp({j} K_1)] is infinite; moment {n} unavailable")
    psi, _ = laplace_exponents(env_triplet_k)
    value = mean
    for j in range(1, int(n)):
        value *= psi(j)
    return value / math.factorial(int(n) - 1) / k ** n


def time_average(path_k, z0, k, t=None):
    """(1/t) ∫₀^t Z_s ds = ln(1 + k z ∫₀^t e^{K_s} ds) / (k t)."""
    _require_k(path_k)
    path = path_k if t is None else path_k.restricted(t)
    log_i = log_exp_functional(path, 1)
    return float(np.logaddexp(0.0, math.log(k * z0) + log_i)) / (k * path.horizon)


def _first_crossing(path, z0, k, level):
    """First time the explicit solution reaches ``level`` from above; ``inf`` if not before T."""
    log_z, log_i = _log_solution(path, z0, k)
    log_level = math.log(level)
    # Z only jumps upwards when K has no negative jumps, so crossings happen inside cells
    log_left = math.log(z0) + path.left_values[1:] - np.logaddexp(0.0, math.log(k * z0) + log_i[1:])
    hits = np.flatnonzero(log_left <= log_level)
    if hits.size == 0:
        return math.inf
    i = int(hits[0])
    t0, t1 = path.times[i], path.times[i + 1]
    k0 = path.values[i]
    slope = (path.left_values[i + 1] - k0) / (t1 - t0)
    if log_z[i] <= log_level:
        return float(t0)

    def g(s):
        h = s - t0
        kk = k0 + slope * h
        cell = math.log(h) + k0 + cell_log_ratio(np.array([slope * h]))[0] if h > 0 else -math.inf
        log_int = np.logaddexp(log_i[i], cell)
        return math.log(z0) + kk - np.logaddexp(0.0, math.log(k * z0) + log_int) - log_level

    return optimize.brentq(g, t0, t1, xtol=1e-14, rtol=4 * np.finfo(float).eps)


def _ratio_estimate(log_num, log_den):
    """Ratio of means of exp(log_num) and exp(log_den) with a delta-method standard error."""
    n = log_num.size
    m_num, m_den = log_num.max(), log_den.max()
    x, y = np.exp(log_num - m_num), np.exp(log_den - m_den)
    mx, my = x.mean(), y.mean()
    ratio = mx / my
    cov = np.cov(x, y, ddof=1)
    var = (cov[0, 0] - 2.0 * ratio * cov[0, 1] + ratio * ratio * cov[1, 1]) / (my * my * n)
    scale = math.exp(m_num - m_den)
    return MCEstimate(ratio * scale, math.sqrt(max(var, 0.0)) * scale, n, max(var, 0.0) * n * scale * scale)


def first_passage_laplace(z, b, lam, env_triplet_k, k, n_paths, horizon, dt, seed):
    """
    E_z[exp(-λ σ_b)] for σ_b = inf{t : Z_t <= b}, two ways.

    Returns ``(formula, direct)``. The formula estimate is the ratio
    E^κ[(1 + k z I_∞)^κ] / E^κ[(z/b + k z I_∞)^κ] with I_∞ sampled under the Esscher tilt κ = κ(λ);
    the direct estimate averages exp(-λ σ_b) over explicit solutions under the original law.
    """
    if not 0 < b <= z:
        raise ValidationError(f"first passage needs 0 < b <= z, got b={b}, z={z}", key='passage.b')
    if not k > 0:
        raise ValidationError("logistic.k must be > 0", key='logistic.k')
    if not env_triplet_k.spectrally_positive:
        raise ValidationError("first passage needs K without negative jumps", key='jumps')
    if not env_triplet_k.mean() < 0:
        raise ValidationError("first passage needs K drifting to -inf", key='env')
    kappa = esscher_kappa(env_triplet_k, lam)
    if not kappa > 1:
        raise DomainError(f"first passage formula needs kappa(lambda) > 1, got {kappa}", key='passage.lambda')
    if b == z:
        one = MCEstimate(1.0, 0.0, n_paths, 0.0)
        return one, one

    stream = seed if isinstance(seed, SeedStream) else SeedStream(seed)
    tilted = esscher_tilt(env_triplet_k, kappa)
    psi_tilted, _ = laplace_exponents(tilted)
    tail_rate = -psi_tilted(1.0)
    if not tail_rate > 0:
        raise DomainError("tilted environment does not make the exponential functional integrable")

    log_num = np.empty(n_paths)
    log_den = np.empty(n_paths)
    worst_tail = 0.0
    for i in range(n_paths):
        path = sample_path(tilted, horizon, dt, stream.generator('passage-tilted', i))
        log_i = log_exp_functional(path, 1)
        log_tail = path.terminal_value - math.log(tail_rate)
        worst_tail = max(worst_tail, math.exp(log_tail - log_i))
        log_i = np.logaddexp(log_i, log_tail)
        log_kzi = math.log(k * z) + log_i
        log_num[i] = kappa * np.logaddexp(0.0, log_kzi)
        log_den[i] = kappa * np.logaddexp(math.log(z / b), log_kzi)
    if worst_tail > TAIL_RELATIVE_TOL:
        log_numerical_event('passage_tail', f"tail share of I_inf up to {worst_tail:.3g} at horizon {horizon}",
                            severity='low')
    formula = _ratio_estimate(log_num, log_den).with_diagnostics(kappa=kappa, max_tail_share=worst_tail)

    acc = MCAccumulator()
    uncrossed = 0
    for i in range(n_paths):
        path = sample_path(env_triplet_k, horizon, dt, stream.generator('passage-direct', i))
        sigma = _first_crossing(path, z, k, b)
        if math.isinf(sigma):
            uncrossed += 1
        acc.update(math.exp(-lam * sigma))
    direct = acc.estimate(uncrossed=uncrossed, truncation_bound=uncrossed / n_paths * math.exp(-lam * horizon))
    logger.info(f"First passage: kappa={kappa:.6g}, formula={formula.mean:.6g}, direct={direct.mean:.6g}")
    return formula, direct


def strong_errors(config, k_path, factors):
    """
    Sup-path errors of the Euler integrator against the explicit solution under common randomness.

    ``k_path`` is a fine reference path of K; the integrator runs on coarsened copies and both
    solutions are compared at the coarse grid times.
    """
    exact = exact_solution(k_path, config.z0, config.k)
    errors = {}
    for factor in factors:
        coarse = k_path.coarsened(factor)
        sde_config = config.sde_config(dt=coarse.dt)
        euler = simulate(sde_config, coarse.shifted(-config.a, variant='K0'), seed=0)
        idx = np.searchsorted(k_path.times, coarse.times)
        errors[factor] = float(np.max(np.abs(euler.values - exact.values[idx])))
    return errors


def empirical_order(errors, base_dt):
    """Least-squares slope of log error against log step."""
    factors = sorted(errors)
    steps = np.log([base_dt * f for f in factors])
    errs = np.log([max(errors[f], 1e-300) for f in factors])
    return float(np.polyfit(steps, errs, 1)[0])


def running_minimum(trajectory, horizon):
    """min of Z over [0, horizon] on the trajectory grid."""
    mask = trajectory.times <= horizon + 1e-12
    return float(np.min(trajectory.values[mask]))
