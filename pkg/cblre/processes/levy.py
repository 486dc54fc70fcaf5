"""
Lévy environments: characteristic triplets, sampled paths and exponential functionals.

A path stores the environment process on a grid made of a uniform grid refined by every jump time.
Between two consecutive grid times the continuous part is represented linearly, so every
functional of the path computed here (exponential functionals, discounted integrals, values at
arbitrary times) is exact for the stored representation.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
from scipy import optimize, special

from ..utils.errors import DomainError, NumericalError, ValidationError
from .constants import ROOT_TOL
from .jumps import JumpMeasure
from .montecarlo import as_generator

logger = logging.getLogger(__name__)

VARIANTS = ('S', 'K', 'K0')


@dataclass(frozen=True)
class LevyTriplet:
    """
    Drift, Gaussian part and jump components of a Lévy process.

    ``drift`` is the canonical drift: components flagged ``compensated`` enter through their
    compensated integral on (-1, 1). ``variant`` records which environment process the triplet
    describes; for variant ``S`` the triplet is that of the logarithm of the stochastic
    exponential of S, whose jumps z act on the population as the factor e^z.
    """

    drift: float
    gaussian_sd: float = 0.0
    components: Tuple[JumpMeasure, ...] = ()
    variant: str = 'K0'
    psi_prime0: Optional[float] = None
    alpha: Optional[float] = None
    gaussian_small_jumps: bool = False

    def __post_init__(self):
        if not math.isfinite(self.drift):
            raise ValidationError(f"drift must be finite, got {self.drift}", key='env.alpha')
        if not self.gaussian_sd >= 0:
            raise ValidationError(f"gaussian_sd must be >= 0, got {self.gaussian_sd}", key='env.sigma')
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}", key='env.variant')
        for component in self.components:
            if not isinstance(component, JumpMeasure):
                raise ValidationError(f"jump component {component!r} is not a jump measure", key='jumps')
            rate = component.rate
            if not (rate > 0 and math.isfinite(rate)):
                raise ValidationError(
                    f"jump component {component!r} must have a finite positive rate, got {rate}", key='jumps')

    @property
    def small_jump_variance(self):
        if not self.gaussian_small_jumps:
            return 0.0
        return sum(c.small_jump_variance() for c in self.components)

    @property
    def total_variance_rate(self):
        """Variance per unit time of the Gaussian part, small-jump correction included."""
        return self.gaussian_sd ** 2 + self.small_jump_variance

    @property
    def linear_drift(self):
        """Drift of the sampled path once the compensators are paid out."""
        return self.drift - sum(c.compensator() for c in self.components)

    @property
    def spectrally_positive(self):
        return all(c.positive for c in self.components)

    def in_domain(self, q):
        """True when E[exp(q K_1)] is finite."""
        return all(c.in_exp_domain(q) for c in self.components)

    @property
    def exp_moment_bound(self):
        """Largest q (capped at 1e6) with E[exp(q |K_1|)] finite."""
        if self.in_domain(1e6) and self.in_domain(-1e6):
            return math.inf
        lo, hi = 0.0, 1.0
        while self.in_domain(hi) and self.in_domain(-hi):
            lo, hi = hi, 2.0 * hi
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if self.in_domain(mid) and self.in_domain(-mid):
                lo = mid
            else:
                hi = mid
        return lo

    def mean(self):
        """E[K_1]."""
        return self.drift + sum(c.mean_contribution() for c in self.components)

    def variance(self):
        """Var K_1 (infinite when a component has no second moment)."""
        return self.total_variance_rate + sum(c.second_moment() for c in self.components)

    def with_drift(self, drift):
        return replace(self, drift=drift)

    def describe(self):
        parts = [f"variant={self.variant}", f"drift={self.drift:.6g}", f"sigma={self.gaussian_sd:.6g}"]
        parts.extend(repr(c) for c in self.components)
        return ', '.join(parts)


def env_correction(components):
    """The integral of (e^v - 1 - v) over (-1, 1) summed over components, compensation-aware."""
    return sum(c.env_correction() for c in components)


def make_environment(alpha, sigma=0.0, pi=(), variant='K0', psi_prime0=None, gaussian_small_jumps=False):
    """
    Builds the triplet of the environment process from the parameters of the environment equation.

    Args:
        alpha: drift of S.
        sigma: Gaussian coefficient of S.
        pi: sequence of jump measures of the Poisson random measure driving S.
        variant: ``'S'``, ``'K'`` or ``'K0'``.
        psi_prime0: ψ'(0+) of the branching mechanism, required for variant ``'K'``.

    Returns:
        LevyTriplet with drift α - σ²/2 - ∫(e^v-1-v)π(dv), minus ψ'(0+) for variant K.
    """
    if not sigma >= 0:
        raise ValidationError(f"env.sigma must be >= 0, got {sigma}", key='env.sigma')
    components = tuple(pi)
    correction = env_correction(components)
    if not math.isfinite(correction):
        raise ValidationError("jump measure is not integrable near zero", key='jumps')
    drift = alpha - 0.5 * sigma ** 2 - correction
    if variant == 'K':
        if psi_prime0 is None or not math.isfinite(psi_prime0):
            raise ValidationError("variant K needs a finite psi'(0+)", key='env.psi_prime0')
        drift -= psi_prime0
    logger.debug(f"Environment {variant}: alpha={alpha}, sigma={sigma}, correction={correction:.6g}")
    return LevyTriplet(drift, sigma, components, variant, psi_prime0, alpha, gaussian_small_jumps)


@dataclass(frozen=True, eq=False)
class EnvironmentPath:
    """
    One realized path on ``times`` (uniform grid refined by jump times).

    ``values[i]`` is K at ``times[i]`` and ``left_values[i]`` its left limit. Cell ``i`` is
    ``(times[i], times[i+1])`` on which K moves linearly from ``values[i]`` to ``left_values[i+1]``.
    ``gaussian_increments[i]`` is the continuous non-drift increment over cell ``i``.
    """

    times: np.ndarray
    values: np.ndarray
    left_values: np.ndarray
    gaussian_increments: np.ndarray
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    jump_mask: np.ndarray
    grid_mask: np.ndarray
    variant: str = 'K0'
    drift: float = 0.0
    dt: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def horizon(self):
        return float(self.times[-1])

    @property
    def n_cells(self):
        return self.times.size - 1

    @property
    def cell_lengths(self):
        return np.diff(self.times)

    @property
    def cell_increments(self):
        """Continuous increment of K over each cell (jumps excluded)."""
        return self.left_values[1:] - self.values[:-1]

    @property
    def jump_increments(self):
        """Jump of K at each grid time (zero where no jump)."""
        return self.values - self.left_values

    @property
    def terminal_value(self):
        return float(self.values[-1])

    def _cell_index(self, t):
        if not 0.0 <= t <= self.horizon:
            raise ValidationError(f"time {t} outside [0, {self.horizon}]")
        return min(int(np.searchsorted(self.times, t, side='right')) - 1, self.n_cells)

    def value_at(self, t):
        """K_t (right-continuous)."""
        i = self._cell_index(t)
        if i == self.n_cells or self.times[i] == t:
            return float(self.values[i])
        frac = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
        return float(self.values[i] + frac * (self.left_values[i + 1] - self.values[i]))

    def left_value_at(self, t):
        """K_{t-}."""
        i = self._cell_index(t)
        if self.times[i] == t:
            return float(self.left_values[i])
        return self.value_at(t)

    def values_at(self, ts):
        return np.array([self.value_at(float(t)) for t in np.atleast_1d(ts)])

    def check_consistency(self, rtol=1e-12):
        """Recomputes K(T) from drift, Gaussian increments and jumps and compares it to the stored value."""
        recomputed = self.drift * self.horizon + float(np.sum(self.gaussian_increments)) + float(np.sum(self.jump_sizes))
        scale = max(1.0, abs(self.terminal_value), float(np.sum(np.abs(self.jump_sizes))))
        if abs(recomputed - self.terminal_value) > rtol * scale:
            raise NumericalError(
                "environment path is inconsistent with its increments",
                {'stored': self.terminal_value, 'recomputed': recomputed})
        return True

    def shifted(self, drift, variant=None):
        """The path of K + drift * t, sharing every random ingredient."""
        return replace(
            self,
            values=self.values + drift * self.times,
            left_values=self.left_values + drift * self.times,
            drift=self.drift + drift,
            variant=variant or self.variant)

    def scaled(self, factor):
        """The path of factor * K."""
        return replace(
            self,
            values=factor * self.values,
            left_values=factor * self.left_values,
            gaussian_increments=factor * self.gaussian_increments,
            jump_sizes=factor * self.jump_sizes,
            drift=factor * self.drift)

    def perturbed(self, eta):
        """The path of K + eta (uniform perturbation, K_0 no longer zero)."""
        return replace(self, values=self.values + eta, left_values=self.left_values + eta)

    def window(self, start, end):
        """The same path restricted to [start, end], keeping absolute times."""
        if not 0.0 <= start < end <= self.horizon:
            raise ValidationError(f"window [{start}, {end}] outside [0, {self.horizon}]")
        inner = (self.times > start) & (self.times < end)
        times = np.concatenate([[start], self.times[inner], [end]])
        values = np.concatenate([[self.value_at(start)], self.values[inner], [self.value_at(end)]])
        left_values = np.concatenate([[self.value_at(start)], self.left_values[inner], [self.left_value_at(end)]])
        jump_mask = np.concatenate([[False], self.jump_mask[inner], [bool(np.any(self.jump_times == end))]])
        grid_mask = np.concatenate([[True], self.grid_mask[inner], [True]])
        # continuous increments split proportionally, consistent with linear interpolation
        cumulative = np.concatenate([[0.0], np.cumsum(self.gaussian_increments)])
        base_times = self.times

        def continuous_at(t):
            i = min(int(np.searchsorted(base_times, t, side='right')) - 1, self.n_cells - 1)
            frac = (t - base_times[i]) / (base_times[i + 1] - base_times[i])
            return cumulative[i] + frac * self.gaussian_increments[i]

        gauss = np.diff(np.array([continuous_at(t) for t in times]))
        keep = (self.jump_times > start) & (self.jump_times <= end)
        return replace(
            self, times=times, values=values, left_values=left_values,
            gaussian_increments=gauss, jump_times=self.jump_times[keep], jump_sizes=self.jump_sizes[keep],
            jump_mask=jump_mask, grid_mask=grid_mask)

    def restricted(self, t):
        """The path on [0, t]."""
        if t >= self.horizon:
            return self
        return self.window(0.0, t)

    def future(self, t):
        """The path of (K_{t+u} - K_t), u in [0, T - t]."""
        w = self.window(t, self.horizon)
        base = w.values[0]
        return replace(w, times=w.times - t, values=w.values - base, left_values=w.left_values - base,
                       jump_times=w.jump_times - t)

    def coarsened(self, factor):
        """
        The same realization on a grid ``factor`` times coarser; jump times are kept exactly.
        """
        factor = int(factor)
        if factor < 1:
            raise ValidationError(f"coarsening factor must be >= 1, got {factor}")
        if factor == 1:
            return self
        grid_index = np.cumsum(self.grid_mask) - 1
        keep = (self.grid_mask & (grid_index % factor == 0)) | self.jump_mask
        keep[0] = keep[-1] = True
        cumulative = np.concatenate([[0.0], np.cumsum(self.gaussian_increments)])
        idx = np.flatnonzero(keep)
        return replace(
            self, times=self.times[idx], values=self.values[idx], left_values=self.left_values[idx],
            gaussian_increments=np.diff(cumulative[idx]), jump_mask=self.jump_mask[idx],
            grid_mask=self.grid_mask[idx], dt=self.dt * factor)

    @classmethod
    def from_function(cls, func, horizon, dt, jumps=(), variant='K0'):
        """
        Deterministic path: continuous part ``func(t)`` (with ``func(0) == 0``) plus the listed
        ``(time, size)`` jumps.
        """
        grid = _uniform_grid(horizon, dt)
        jump_times = np.array([float(t) for t, _ in jumps])
        jump_sizes = np.array([float(z) for _, z in jumps])
        order = np.argsort(jump_times, kind='stable')
        jump_times, jump_sizes = jump_times[order], jump_sizes[order]
        times, grid_mask, jump_mask = _merge_times(grid, jump_times)
        continuous = np.array([float(func(t)) for t in times])
        jumped = np.searchsorted(jump_times, times, side='right')
        jumped_before = np.searchsorted(jump_times, times, side='left')
        cum_jumps = np.concatenate([[0.0], np.cumsum(jump_sizes)])
        return cls(
            times=times, values=continuous + cum_jumps[jumped], left_values=continuous + cum_jumps[jumped_before],
            gaussian_increments=np.diff(continuous), jump_times=jump_times, jump_sizes=jump_sizes,
            jump_mask=jump_mask, grid_mask=grid_mask, variant=variant, drift=0.0, dt=float(dt))

    @classmethod
    def linear(cls, slope, horizon, dt=None, variant='K0'):
        """K_t = slope * t."""
        return cls.from_function(lambda t: slope * t, horizon, dt or horizon, variant=variant)


def _uniform_grid(horizon, dt):
    if not horizon > 0:
        raise ValidationError(f"horizon must be > 0, got {horizon}", key='T')
    if not 0 < dt <= horizon:
        raise ValidationError(f"dt must lie in (0, T], got {dt}", key='dt')
    n = max(1, int(math.ceil(horizon / dt - 1e-9)))
    grid = np.arange(n + 1) * dt
    grid[-1] = horizon
    return grid


def _merge_times(grid, jump_times):
    times = np.union1d(grid, jump_times)
    grid_mask = np.isin(times, grid)
    jump_mask = np.isin(times, jump_times)
    return times, grid_mask, jump_mask


def sample_path(triplet, horizon, dt, seed=None):
    """
    Samples one path by the Lévy-Itô decomposition with the components' truncation.

    Jump counts are Poisson(rate * cell length) per uniform cell with uniform times inside the
    cell; Gaussian increments are drawn on the refined grid.
    """
    rng = as_generator(seed)
    grid = _uniform_grid(horizon, dt)
    lengths = np.diff(grid)
    all_times, all_sizes = [], []
    for component in triplet.components:
        counts = rng.poisson(component.rate * lengths)
        total = int(counts.sum())
        if total == 0:
            continue
        starts = np.repeat(grid[:-1], counts)
        widths = np.repeat(lengths, counts)
        all_times.append(starts + widths * rng.random(total))
        all_sizes.append(component.sample(rng, total))
    if all_times:
        jump_times = np.concatenate(all_times)
        jump_sizes = np.concatenate(all_sizes)
        order = np.argsort(jump_times, kind='stable')
        jump_times, jump_sizes = jump_times[order], jump_sizes[order]
        # a jump exactly on a grid point or at time 0 has probability zero; keep it strictly inside
        jump_times = np.clip(jump_times, np.nextafter(0.0, 1.0), horizon)
    else:
        jump_times, jump_sizes = np.empty(0), np.empty(0)
    times, grid_mask, jump_mask = _merge_times(grid, jump_times)
    h = np.diff(times)
    sd = math.sqrt(triplet.total_variance_rate)
    gauss = sd * np.sqrt(h) * rng.standard_normal(h.size) if sd > 0 else np.zeros(h.size)
    drift = triplet.linear_drift
    continuous = np.concatenate([[0.0], np.cumsum(drift * h + gauss)])
    jumps_at = np.zeros(times.size)
    np.add.at(jumps_at, np.searchsorted(times, jump_times), jump_sizes)
    cum_jumps = np.cumsum(jumps_at)
    values = continuous + cum_jumps
    left_values = values - jumps_at
    path = EnvironmentPath(
        times=times, values=values, left_values=left_values, gaussian_increments=gauss,
        jump_times=jump_times, jump_sizes=jump_sizes, jump_mask=jump_mask, grid_mask=grid_mask,
        variant=triplet.variant, drift=drift, dt=float(dt))
    logger.debug(f"Sampled {triplet.variant} path: T={horizon}, cells={path.n_cells}, jumps={jump_times.size}")
    return path


def laplace_exponents(triplet):
    """
    Returns ``(psi, psi_hat)`` with ψ_K(q) = log E[exp(q K_1)] and ψ̂_K(q) = ψ_K(-q).
    """
    variance = triplet.total_variance_rate

    def psi(q):
        if not triplet.in_domain(q):
            raise DomainError(f"exponential moment of order {q} is infinite for this environment")
        value = triplet.drift * q + 0.5 * variance * q * q
        for component in triplet.components:
            value += component.laplace_term(q)
        return value

    def psi_hat(q):
        return psi(-q)

    return psi, psi_hat


def esscher_kappa(triplet, lam, max_root=1e8):
    """
    Largest root of ψ̂_K(u) = λ, bracketed to the right of the minimizer of the convex ψ̂_K.
    """
    if lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam}", key='lambda')
    _, psi_hat = laplace_exponents(triplet)

    def usable(u):
        return triplet.in_domain(-u)

    lo = 0.0
    if triplet.mean() > 0:
        # psi_hat dips below zero; its minimizer lies right of 0
        ub = 1.0
        while usable(ub) and psi_hat(ub) <= 0:
            ub *= 2.0
            if ub > max_root:
                raise DomainError(f"psi_hat does not return to zero, lambda={lam} unreachable")
        if not usable(ub):
            ub = _domain_edge(usable, ub / 2.0, ub)
        res = optimize.minimize_scalar(psi_hat, bounds=(0.0, ub), method='bounded', options={'xatol': 1e-12})
        lo = float(res.x)
    if psi_hat(lo) > lam:
        raise DomainError(f"lambda={lam} is below the minimum of psi_hat")
    hi = max(1.0, 2.0 * lo)
    while True:
        if not usable(hi):
            edge = _domain_edge(usable, lo, hi)
            if psi_hat(edge) < lam:
                raise DomainError(f"lambda={lam} is unreachable within the exponential-moment domain")
            hi = edge
            break
        if psi_hat(hi) >= lam:
            break
        lo, hi = hi, 2.0 * hi
        if hi > max_root:
            raise DomainError(f"lambda={lam} is unreachable (psi_hat stays below it)")
    f = lambda u: psi_hat(u) - lam
    if f(hi) == 0:
        return hi
    root = optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(root)) > ROOT_TOL:
        raise NumericalError("esscher root did not reach tolerance", {'lambda': lam, 'root': root, 'residual': f(root)})
    return root


def _domain_edge(usable, inside, outside, iterations=80):
    for _ in range(iterations):
        mid = 0.5 * (inside + outside)
        if usable(mid):
            inside = mid
        else:
            outside = mid
    return inside


def esscher_tilt(triplet, kappa):
    """
    Triplet of K under the measure with density exp(-κ K_t - ψ̂_K(κ) t).

    Gaussian part unchanged; drift shifted by -κσ² and by the change of the compensator;
    each jump measure multiplied by e^{-κz}.
    """
    if kappa == 0:
        return triplet
    if not triplet.in_domain(-kappa):
        raise DomainError(f"tilt {kappa} is outside the exponential-moment domain", key='kappa')
    tilted = tuple(c.tilted(kappa) for c in triplet.components)
    for component in tilted:
        if not math.isfinite(component.rate):
            raise DomainError(f"tilt {kappa} makes a jump rate infinite", key='kappa')
    drift = triplet.drift - kappa * triplet.total_variance_rate
    for old, new in zip(triplet.components, tilted):
        drift += new.compensator() - old.compensator()
    return replace(triplet, drift=drift, components=tilted)


def cell_log_ratio(d):
    """log((e^d - 1)/d), stable for every d."""
    d = np.asarray(d, dtype=float)
    out = np.empty_like(d)
    small = np.abs(d) < 1e-8
    pos = (d > 0) & ~small
    neg = (d < 0) & ~small
    out[small] = 0.5 * d[small]
    out[pos] = d[pos] + np.log(-np.expm1(-d[pos])) - np.log(d[pos])
    out[neg] = np.log(-np.expm1(d[neg])) - np.log(-d[neg])
    return out


def _log_cells(path, sign):
    a = sign * path.values[:-1]
    b = sign * path.left_values[1:]
    return np.log(path.cell_lengths) + a + cell_log_ratio(b - a)


def exp_functional(path, sign=1):
    """The integral of exp(±K_s) over [0, T], exact on each linear cell."""
    return float(np.exp(special.logsumexp(_log_cells(path, _sign(sign)))))


def log_exp_functional(path, sign=1):
    """log of ``exp_functional``; does not overflow on long horizons."""
    return float(special.logsumexp(_log_cells(path, _sign(sign))))


def cumulative_log_exp_functional(path, sign=1):
    """log of the integral of exp(±K) over [0, t_i] at every grid time (-inf at t=0)."""
    cells = _log_cells(path, _sign(sign))
    return np.concatenate([[-np.inf], np.logaddexp.accumulate(cells)])


def cumulative_exp_functional(path, sign=1):
    return np.exp(cumulative_log_exp_functional(path, sign))


def discounted_integral(path, rate=1.0):
    """The integral of e^{-rate u} K_u du over [0, T], exact on each linear cell."""
    t0, t1 = path.times[:-1], path.times[1:]
    h = t1 - t0
    k0 = path.values[:-1]
    slope = (path.left_values[1:] - k0) / h
    e0 = np.exp(-rate * t0)
    rh = rate * h
    # integral of e^{-rate w} w over [0, h] is (1 - e^{-rh}(1 + rh)) / rate^2
    tail = np.where(rh < 1e-4, h * h / 2.0 * (1.0 - 2.0 * rh / 3.0 + rh * rh / 4.0),
                    -(np.expm1(-rh) + rh * np.exp(-rh)) / (rate * rate))
    level = -e0 * np.expm1(-rh) / rate
    return float(np.sum(k0 * level + slope * e0 * tail))


def stieltjes_discounted(path):
    """The Stieltjes integral of e^{-s} dK_s over [0, T], by parts: e^{-T}K_T + ∫e^{-s}K_s ds."""
    return math.exp(-path.horizon) * path.terminal_value + discounted_integral(path)


def _sign(sign):
    if sign in (1, '+', 1.0):
        return 1.0
    if sign in (-1, '-', -1.0):
        return -1.0
    raise ValidationError(f"sign must be + or -, got {sign!r}")
