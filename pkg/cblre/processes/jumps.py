"""
Jump laws and jump measures.

A ``JumpLaw`` is a probability law on the real line exposing the partial moments the toolkit needs,
in closed form where the family allows it. A ``JumpMeasure`` is a Lévy measure: environment jump
components (on the real line) and branching or immigration measures (on the half line) share the
same interface, so the Lévy-exponent, mechanism and SDE code never branch on the family.

Interval arguments are ``(lower, upper)`` with ``closed=(include_lower, include_upper)``; the
flags only matter for laws with atoms.
"""
import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Tuple

import numpy as np
from scipy import integrate, special

from ..utils.errors import DomainError, ValidationError
from .constants import COMPENSATION_INTERVAL, QUAD_ABS_TOL, QUAD_LIMIT

INF = math.inf
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _quad(func, lower, upper, points=None):
    """Adaptive quadrature with the toolkit tolerance; empty intervals integrate to 0."""
    if not lower < upper:
        return 0.0
    kwargs = dict(epsabs=QUAD_ABS_TOL, epsrel=1e-10, limit=QUAD_LIMIT)
    if points is not None and math.isfinite(lower) and math.isfinite(upper):
        inner = [p for p in points if lower < p < upper]
        if inner:
            kwargs['points'] = inner
    value, _ = integrate.quad(func, lower, upper, **kwargs)
    return value


def _in_interval(x, lower, upper, closed):
    x = np.asarray(x, dtype=float)
    above = x >= lower if closed[0] else x > lower
    below = x <= upper if closed[1] else x < upper
    return above & below


def _sample_by_rejection(draw, accept, size, rng, max_rounds=10000):
    """Draws ``size`` values from ``draw(n)`` keeping those where ``accept(values)`` holds."""
    out = np.empty(0)
    rounds = 0
    while out.size < size:
        rounds += 1
        if rounds > max_rounds:
            raise DomainError("rejection sampler failed: acceptance probability too small")
        need = size - out.size
        batch = draw(max(2 * need, 16))
        out = np.concatenate([out, batch[accept(batch)]])
    return out[:size]


class JumpLaw:
    """Probability law of a single jump."""

    #: closed support hull of the law
    support = (-INF, INF)

    @property
    def positive(self):
        return self.support[0] >= 0.0

    def sample(self, rng, size):
        raise NotImplementedError

    def sample_restricted(self, rng, size, lower=-INF, upper=INF):
        """Samples from the law conditioned on ``lower <= Z < upper``."""
        if self.probability(lower, upper, closed=(True, False)) <= 0.0:
            raise DomainError(f"law {self!r} puts no mass on [{lower}, {upper})")
        return _sample_by_rejection(
            lambda n: self.sample(rng, n),
            lambda z: (z >= lower) & (z < upper),
            size, rng)

    def pdf(self, z):
        raise NotImplementedError

    def expect(self, func, lower=-INF, upper=INF, closed=(False, False)):
        """E[func(Z); Z in interval], by quadrature against the density."""
        lo = max(lower, self.support[0])
        hi = min(upper, self.support[1])
        return _quad(lambda z: func(z) * self.pdf(z), lo, hi)

    def probability(self, lower=-INF, upper=INF, closed=(False, False)):
        return self.expect(lambda z: 1.0, lower, upper, closed)

    def partial_moment(self, lower=-INF, upper=INF, closed=(False, False)):
        return self.expect(lambda z: z, lower, upper, closed)

    def partial_exp_moment(self, q, lower=-INF, upper=INF, closed=(False, False)):
        return self.expect(lambda z: math.exp(q * z), lower, upper, closed)

    def in_mgf_domain(self, q):
        return True

    def mgf(self, q):
        if not self.in_mgf_domain(q):
            raise DomainError(f"E[exp({q} Z)] is infinite for {self!r}")
        return self.partial_exp_moment(q)

    @property
    def mean(self):
        return self.partial_moment()

    @property
    def second_moment(self):
        return self.expect(lambda z: z * z)

    def tilted(self, kappa):
        """Returns ``(factor, law)`` with ``exp(-kappa z) P(dz) = factor * law(dz)``."""
        raise DomainError(f"Esscher tilt is not available for {self!r}")

    def has_finite_xlogx(self):
        return True

    def breakpoints(self):
        return ()


@dataclass(frozen=True)
class Constant(JumpLaw):
    value: float

    @property
    def support(self):
        return (self.value, self.value)

    def sample(self, rng, size):
        return np.full(size, float(self.value))

    def sample_restricted(self, rng, size, lower=-INF, upper=INF):
        if not lower <= self.value < upper:
            raise DomainError(f"law {self!r} puts no mass on [{lower}, {upper})")
        return self.sample(rng, size)

    def expect(self, func, lower=-INF, upper=INF, closed=(False, False)):
        return float(func(self.value)) if _in_interval(self.value, lower, upper, closed) else 0.0

    def partial_exp_moment(self, q, lower=-INF, upper=INF, closed=(False, False)):
        return self.expect(lambda z: math.exp(q * z), lower, upper, closed)

    def tilted(self, kappa):
        return math.exp(-kappa * self.value), self

    def breakpoints(self):
        return (abs(self.value),)


@dataclass(frozen=True)
class Discrete(JumpLaw):
    values: Tuple[float, ...]
    probs: Tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ValidationError("discrete law needs matching non-empty values and probs")
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValidationError("discrete law probabilities must be non-negative and sum to 1")

    @property
    def support(self):
        return (min(self.values), max(self.values))

    def sample(self, rng, size):
        return rng.choice(np.asarray(self.values, dtype=float), size=size, p=np.asarray(self.probs))

    def expect(self, func, lower=-INF, upper=INF, closed=(False, False)):
        vals = np.asarray(self.values, dtype=float)
        mask = _in_interval(vals, lower, upper, closed)
        return float(sum(p * func(v) for v, p, m in zip(vals, self.probs, mask) if m))

    def tilted(self, kappa):
        weights = np.asarray(self.probs) * np.exp(-kappa * np.asarray(self.values, dtype=float))
        factor = float(weights.sum())
        return factor, Discrete(tuple(self.values), tuple(float(w) for w in weights / factor))

    def breakpoints(self):
        return tuple(abs(v) for v in self.values)


def two_point(value):
    """Jumps of size +value or -value with equal probability."""
    return Discrete((-float(value), float(value)), (0.5, 0.5))


@dataclass(frozen=True)
class Normal(JumpLaw):
    loc: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"normal law needs scale > 0, got {self.scale}")

    def sample(self, rng, size):
        return rng.normal(self.loc, self.scale, size)

    def pdf(self, z):
        x = (z - self.loc) / self.scale
        return math.exp(-0.5 * x * x) / (_SQRT_2PI * self.scale)

    def _standardize(self, lower, upper):
        return (lower - self.loc) / self.scale, (upper - self.loc) / self.scale

    def probability(self, lower=-INF, upper=INF, closed=(False, False)):
        a, b = self._standardize(lower, upper)
        return float(special.ndtr(b) - special.ndtr(a))

    def partial_moment(self, lower=-INF, upper=INF, closed=(False, False)):
        a, b = self._standardize(lower, upper)

        def phi(x):
            return 0.0 if math.isinf(x) else math.exp(-0.5 * x * x) / _SQRT_2PI

        return float(self.loc * (special.ndtr(b) - special.ndtr(a)) + self.scale * (phi(a) - phi(b)))

    def partial_exp_moment(self, q, lower=-INF, upper=INF, closed=(False, False)):
        a, b = self._standardize(lower, upper)
        s = self.scale
        scale = math.exp(q * self.loc + 0.5 * q * q * s * s)
        return float(scale * (special.ndtr(b - q * s) - special.ndtr(a - q * s)))

    @property
    def mean(self):
        return self.loc

    @property
    def second_moment(self):
        return self.loc ** 2 + self.scale ** 2

    def tilted(self, kappa):
        factor = math.exp(-kappa * self.loc + 0.5 * (kappa * self.scale) ** 2)
        return factor, Normal(self.loc - kappa * self.scale ** 2, self.scale)


@dataclass(frozen=True)
class Exponential(JumpLaw):
    scale: float  # mean

    support = (0.0, INF)

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"exponential law needs mean > 0, got {self.scale}")

    def sample(self, rng, size):
        return rng.exponential(self.scale, size)

    def sample_restricted(self, rng, size, lower=-INF, upper=INF):
        lo = max(lower, 0.0)
        if math.isinf(upper):
            return lo + rng.exponential(self.scale, size)
        return super().sample_restricted(rng, size, lower, upper)

    def pdf(self, z):
        return math.exp(-z / self.scale) / self.scale if z >= 0 else 0.0

    def probability(self, lower=-INF, upper=INF, closed=(False, False)):
        lo, hi = max(lower, 0.0), max(upper, 0.0)
        return math.exp(-lo / self.scale) - (0.0 if math.isinf(hi) else math.exp(-hi / self.scale))

    def partial_moment(self, lower=-INF, upper=INF, closed=(False, False)):
        m = self.scale
        lo, hi = max(lower, 0.0), max(upper, 0.0)
        upper_term = 0.0 if math.isinf(hi) else (hi + m) * math.exp(-hi / m)
        return (lo + m) * math.exp(-lo / m) - upper_term

    def partial_exp_moment(self, q, lower=-INF, upper=INF, closed=(False, False)):
        m = self.scale
        lo, hi = max(lower, 0.0), max(upper, 0.0)
        r = 1.0 / m - q
        if math.isinf(hi):
            if r <= 0:
                return INF
            return math.exp(-r * lo) / (m * r)
        if r == 0:
            return (hi - lo) / m
        return (math.exp(-r * lo) - math.exp(-r * hi)) / (m * r)

    def in_mgf_domain(self, q):
        return q < 1.0 / self.scale

    @property
    def mean(self):
        return self.scale

    @property
    def second_moment(self):
        return 2.0 * self.scale ** 2

    def tilted(self, kappa):
        denom = 1.0 + kappa * self.scale
        if denom <= 0:
            raise DomainError(f"tilt {kappa} makes the exponential jump rate infinite")
        return 1.0 / denom, Exponential(self.scale / denom)


@dataclass(frozen=True)
class Pareto(JumpLaw):
    xmin: float
    index: float

    def __post_init__(self):
        if not (self.xmin > 0 and self.index > 0):
            raise ValidationError("pareto law needs xmin > 0 and index > 0")

    @property
    def support(self):
        return (self.xmin, INF)

    def sample(self, rng, size):
        u = 1.0 - rng.random(size)
        return self.xmin * u ** (-1.0 / self.index)

    def sample_restricted(self, rng, size, lower=-INF, upper=INF):
        if math.isinf(upper):
            return Pareto(max(self.xmin, lower), self.index).sample(rng, size)
        return super().sample_restricted(rng, size, lower, upper)

    def pdf(self, z):
        if z < self.xmin:
            return 0.0
        return self.index * self.xmin ** self.index * z ** (-self.index - 1.0)

    def probability(self, lower=-INF, upper=INF, closed=(False, False)):
        lo, hi = max(lower, self.xmin), max(upper, self.xmin)
        return (self.xmin / lo) ** self.index - (0.0 if math.isinf(hi) else (self.xmin / hi) ** self.index)

    def partial_moment(self, lower=-INF, upper=INF, closed=(False, False)):
        p, x0 = self.index, self.xmin
        lo, hi = max(lower, x0), max(upper, x0)
        if p == 1.0:
            return INF if math.isinf(hi) else x0 * math.log(hi / lo)
        if math.isinf(hi):
            return INF if p < 1.0 else p * x0 ** p * lo ** (1.0 - p) / (p - 1.0)
        return p * x0 ** p * (lo ** (1.0 - p) - hi ** (1.0 - p)) / (p - 1.0)

    def partial_exp_moment(self, q, lower=-INF, upper=INF, closed=(False, False)):
        if q == 0:
            return self.probability(lower, upper, closed)
        if q > 0 and math.isinf(upper):
            return INF
        return super().partial_exp_moment(q, lower, upper, closed)

    def in_mgf_domain(self, q):
        return q <= 0

    @property
    def second_moment(self):
        p = self.index
        return INF if p <= 2.0 else p * self.xmin ** 2 / (p - 2.0)

    def tilted(self, kappa):
        if kappa == 0:
            return 1.0, self
        return super().tilted(kappa)

    def has_finite_xlogx(self):
        return self.index > 1.0

    def breakpoints(self):
        return (self.xmin,)


class JumpMeasure:
    """
    Lévy measure of a jump component.

    ``compensated`` says whether the part of the measure on (-1, 1) enters the process through its
    compensated Poisson integral (the Lévy-Itô convention of the environment equation).
    """

    compensated = True

    # -- integrals ---------------------------------------------------------------------------
    def integrate(self, func, lower=-INF, upper=INF, closed=(False, False)):
        raise NotImplementedError

    def mass(self, lower=-INF, upper=INF, closed=(False, False)):
        return self.integrate(lambda z: 1.0, lower, upper, closed)

    def first_moment(self, lower=-INF, upper=INF, closed=(False, False)):
        return self.integrate(lambda z: z, lower, upper, closed)

    def second_moment(self, lower=-INF, upper=INF, closed=(False, False)):
        return self.integrate(lambda z: z * z, lower, upper, closed)

    def exp_integral(self, q, lower=-INF, upper=INF, closed=(False, False)):
        return self.integrate(lambda z: math.exp(q * z), lower, upper, closed)

    def in_exp_domain(self, q):
        return True

    def sample(self, rng, size, lower=-INF, upper=INF):
        raise NotImplementedError

    def tilted(self, kappa):
        raise DomainError(f"Esscher tilt is not available for {self!r}")

    @property
    def positive(self):
        raise NotImplementedError

    @property
    def finite_activity(self):
        return True

    def has_finite_xlogx(self):
        return True

    def breakpoints(self):
        return ()

    def small_jump_variance(self):
        """Variance per unit time of the jumps removed by truncation (zero when nothing is removed)."""
        return 0.0

    # -- quantities derived for Lévy exponents ----------------------------------------------
    @property
    def rate(self):
        return self.mass()

    def compensator(self):
        """Drift removed by compensation: the integral of z over (-1, 1) when compensated."""
        if not self.compensated:
            return 0.0
        lo, hi = COMPENSATION_INTERVAL
        return self.first_moment(lo, hi)

    def mean_contribution(self):
        """Contribution of this component to E[K_1]."""
        return self.first_moment() - self.compensator()

    def env_correction(self):
        """The integral of (e^v - 1 - v) over (-1, 1), without the -v term when uncompensated."""
        lo, hi = COMPENSATION_INTERVAL
        value = self.exp_integral(1.0, lo, hi) - self.mass(lo, hi)
        if self.compensated:
            value -= self.first_moment(lo, hi)
        return value

    def laplace_term(self, q):
        """The integral of (e^{qz} - 1 - qz 1_{|z|<1}) against the measure, compensation-aware."""
        if not self.in_exp_domain(q):
            raise DomainError(f"exponential moment of order {q} is infinite for {self!r}")
        if q == 0:
            return 0.0
        return self.exp_integral(q) - self.mass() - q * self.compensator()

    def tail_mass(self, x):
        return self.mass(x, INF)

    def left_tail_mass(self, x):
        return self.mass(-INF, -x)


@dataclass(frozen=True)
class CompoundPoisson(JumpMeasure):
    """Finite-activity measure ``rate * law``."""

    rate_value: float
    law: JumpLaw
    compensated: bool = True

    def __post_init__(self):
        if not self.rate_value > 0:
            raise ValidationError(f"compound Poisson rate must be > 0, got {self.rate_value}")

    @property
    def rate(self):
        return self.rate_value

    @property
    def positive(self):
        return self.law.positive

    def integrate(self, func, lower=-INF, upper=INF, closed=(False, False)):
        return self.rate_value * self.law.expect(func, lower, upper, closed)

    def mass(self, lower=-INF, upper=INF, closed=(False, False)):
        return self.rate_value * self.law.probability(lower, upper, closed)

    def first_moment(self, lower=-INF, upper=INF, closed=(False, False)):
        return self.rate_value * self.law.partial_moment(lower, upper, closed)

    def second_moment(self, lower=-INF, upper=INF, closed=(False, False)):
        if lower == -INF and upper == INF:
            return self.rate_value * self.law.second_moment
        return super().second_moment(lower, upper, closed)

    def exp_integral(self, q, lower=-INF, upper=INF, closed=(False, False)):
        return self.rate_value * self.law.partial_exp_moment(q, lower, upper, closed)

    def in_exp_domain(self, q):
        return self.law.in_mgf_domain(q)

    def sample(self, rng, size, lower=-INF, upper=INF):
        if size == 0:
            return np.empty(0)
        if lower == -INF and upper == INF:
            return self.law.sample(rng, size)
        return self.law.sample_restricted(rng, size, lower, upper)

    def tilted(self, kappa):
        factor, law = self.law.tilted(kappa)
        if not math.isfinite(factor):
            raise DomainError(f"tilt {kappa} makes the jump rate infinite")
        return CompoundPoisson(self.rate_value * factor, law, self.compensated)

    def has_finite_xlogx(self):
        return self.law.has_finite_xlogx()

    def breakpoints(self):
        return self.law.breakpoints()


def _power_integral(c, k, lower, upper):
    """Closed form of the integral of c z^k over [lower, upper] for 0 <= lower < upper <= inf."""
    if not lower < upper or c == 0:
        return 0.0
    if k == -1.0:
        if lower == 0 or math.isinf(upper):
            return INF
        return c * math.log(upper / lower)
    if lower == 0 and k + 1.0 <= 0:
        return INF
    if math.isinf(upper):
        if k + 1.0 >= 0:
            return INF
        return -c * lower ** (k + 1.0) / (k + 1.0)
    return c * (upper ** (k + 1.0) - lower ** (k + 1.0)) / (k + 1.0)


@dataclass(frozen=True)
class PowerLawDensity(JumpMeasure):
    """
    Density ``c_pos z^{-1-alpha} e^{-theta_pos z}`` on ``eps < z < upper`` and
    ``c_neg |z|^{-1-alpha} e^{-theta_neg |z|}`` on ``eps < -z < upper``.

    With ``eps > 0`` and ``upper = 1`` this is the truncated small-jump density of an environment;
    with ``eps = 0`` and ``upper = inf`` it is the Lévy measure of a stable branching mechanism.
    """

    c_pos: float
    c_neg: float
    alpha: float
    eps: float = 0.0
    upper: float = 1.0
    theta_pos: float = 0.0
    theta_neg: float = 0.0
    compensated: bool = True

    def __post_init__(self):
        if self.c_pos < 0 or self.c_neg < 0 or self.c_pos + self.c_neg == 0:
            raise ValidationError("power-law density needs c_pos, c_neg >= 0, not both zero")
        if not 0 < self.alpha < 2:
            raise ValidationError(f"power-law index alpha must lie in (0, 2), got {self.alpha}")
        if self.eps < 0 or not self.upper > self.eps:
            raise ValidationError("power-law density needs 0 <= eps < upper")
        if math.isinf(self.upper):
            if self.c_pos > 0 and self.theta_pos < 0:
                raise DomainError("negative tempering on an unbounded support is not integrable")
            if self.c_neg > 0 and self.theta_neg < 0:
                raise DomainError("negative tempering on an unbounded support is not integrable")

    @property
    def positive(self):
        return self.c_neg == 0

    @property
    def finite_activity(self):
        return self.eps > 0

    def _sides(self):
        if self.c_pos > 0:
            yield 1.0, self.c_pos, self.theta_pos
        if self.c_neg > 0:
            yield -1.0, self.c_neg, self.theta_neg

    def _side_range(self, sign, lower, upper, closed):
        """Magnitude range [l, h] of the side ``sign`` intersected with the interval."""
        if sign > 0:
            lo, hi = max(self.eps, lower), min(self.upper, upper)
        else:
            lo, hi = max(self.eps, -upper), min(self.upper, -lower)
        return max(lo, 0.0), hi

    def _side_integral(self, func, sign, c, theta, lo, hi):
        if not lo < hi:
            return 0.0
        alpha = self.alpha

        def integrand(r):
            return func(sign * r) * c * r ** (-1.0 - alpha) * math.exp(-theta * r)

        if math.isinf(hi):
            # split so the singular and the tail parts are handled separately
            mid = max(lo, 1.0)
            return _quad(integrand, lo, mid) + _quad(integrand, mid, INF)
        return _quad(integrand, lo, hi)

    def integrate(self, func, lower=-INF, upper=INF, closed=(False, False)):
        total = 0.0
        for sign, c, theta in self._sides():
            lo, hi = self._side_range(sign, lower, upper, closed)
            total += self._side_integral(func, sign, c, theta, lo, hi)
        return total

    def _moment(self, k, lower, upper, closed, signed):
        total = 0.0
        for sign, c, theta in self._sides():
            lo, hi = self._side_range(sign, lower, upper, closed)
            if theta == 0:
                value = _power_integral(c, -1.0 - self.alpha + k, lo, hi)
            else:
                value = self._side_integral(lambda z: abs(z) ** k, sign, c, theta, lo, hi)
            total += (sign if signed else 1.0) * value
        return total

    def mass(self, lower=-INF, upper=INF, closed=(False, False)):
        return self._moment(0, lower, upper, closed, signed=False)

    def first_moment(self, lower=-INF, upper=INF, closed=(False, False)):
        return self._moment(1, lower, upper, closed, signed=True)

    def second_moment(self, lower=-INF, upper=INF, closed=(False, False)):
        return self._moment(2, lower, upper, closed, signed=False)

    def in_exp_domain(self, q):
        if math.isfinite(self.upper):
            return True
        ok = True
        if self.c_pos > 0:
            ok = ok and q <= self.theta_pos
        if self.c_neg > 0:
            ok = ok and -q <= self.theta_neg
        return ok

    def _sample_side(self, rng, size, theta, lo, hi):
        alpha = self.alpha
        lo_pow = lo ** (-alpha)
        hi_pow = 0.0 if math.isinf(hi) else hi ** (-alpha)

        def draw(n):
            u = rng.random(n)
            return (lo_pow - u * (lo_pow - hi_pow)) ** (-1.0 / alpha)

        if theta == 0:
            return draw(size)
        if theta > 0:
            return _sample_by_rejection(draw, lambda r: rng.random(r.size) < np.exp(-theta * (r - lo)), size, rng)
        return _sample_by_rejection(draw, lambda r: rng.random(r.size) < np.exp(-theta * (r - hi)), size, rng)

    def sample(self, rng, size, lower=-INF, upper=INF):
        if size == 0:
            return np.empty(0)
        sides = []
        for sign, c, theta in self._sides():
            lo, hi = self._side_range(sign, lower, upper, (True, False))
            if lo < hi:
                if lo == 0:
                    raise DomainError("cannot sample an infinite-activity density without a positive cut")
                sides.append((sign, theta, lo, hi))
        if not sides:
            raise DomainError(f"{self!r} puts no mass on [{lower}, {upper})")
        masses = np.array([self._side_mass(sign, lo, hi) for sign, _, lo, hi in sides])
        choice = rng.choice(len(sides), size=size, p=masses / masses.sum())
        out = np.empty(size)
        for j, (sign, theta, lo, hi) in enumerate(sides):
            idx = np.flatnonzero(choice == j)
            if idx.size:
                out[idx] = sign * self._sample_side(rng, idx.size, theta, lo, hi)
        return out

    def _side_mass(self, sign, lo, hi):
        c = self.c_pos if sign > 0 else self.c_neg
        theta = self.theta_pos if sign > 0 else self.theta_neg
        if theta == 0:
            return _power_integral(c, -1.0 - self.alpha, lo, hi)
        return self._side_integral(lambda z: 1.0, sign, c, theta, lo, hi)

    def tilted(self, kappa):
        return replace(self, theta_pos=self.theta_pos + kappa, theta_neg=self.theta_neg - kappa)

    def has_finite_xlogx(self):
        if self.c_pos == 0 or math.isfinite(self.upper) or self.theta_pos > 0:
            return True
        return self.alpha > 1.0

    def small_jump_variance(self):
        if self.eps == 0:
            return 0.0
        return (self.c_pos + self.c_neg) * self.eps ** (2.0 - self.alpha) / (2.0 - self.alpha)


@dataclass(frozen=True)
class DensityMeasure(JumpMeasure):
    """
    Measure with a user density on ``(lower, upper)`` inside the half line; integrals by quadrature.

    Used for branching and immigration measures outside the closed-form families.
    """

    density: Callable[[float], float]
    lower: float = 0.0
    upper: float = INF
    name: str = 'density'
    compensated: bool = True
    table_size: int = 4097

    def __post_init__(self):
        if self.lower < 0 or not self.upper > self.lower:
            raise ValidationError("density measure needs 0 <= lower < upper")

    @property
    def positive(self):
        return True

    @property
    def finite_activity(self):
        return math.isfinite(self.mass())

    def integrate(self, func, lower=-INF, upper=INF, closed=(False, False)):
        lo, hi = max(lower, self.lower), min(upper, self.upper)
        if not lo < hi:
            return 0.0
        if math.isinf(hi):
            mid = max(lo, 1.0)
            return (_quad(lambda z: func(z) * self.density(z), lo, mid)
                    + _quad(lambda z: func(z) * self.density(z), mid, INF))
        return _quad(lambda z: func(z) * self.density(z), lo, hi)

    def in_exp_domain(self, q):
        if q <= 0 or math.isfinite(self.upper):
            return True

        def integrand(z):
            d = self.density(z)
            return math.exp(q * z + math.log(d)) if d > 0 else 0.0

        # quad reports a divergent tail as a large finite value
        with warnings.catch_warnings():
            warnings.simplefilter('error', integrate.IntegrationWarning)
            try:
                return _tail_converges(integrand, max(1.0, self.lower), self.upper)
            except (integrate.IntegrationWarning, OverflowError):
                return False

    def _cutoff(self, lo, total):
        """Point beyond which the remaining mass is negligible."""
        if math.isfinite(self.upper):
            return self.upper
        x = max(2.0 * lo, lo + 1.0)
        while self.mass(x, INF) > 1e-12 * total:
            x *= 2.0
            if x > 1e12:
                break
        return x

    def sample(self, rng, size, lower=-INF, upper=INF):
        if size == 0:
            return np.empty(0)
        lo, hi = max(lower, self.lower), min(upper, self.upper)
        total = self.mass(lo, hi)
        if not (0 < total < INF) or lo <= 0:
            raise DomainError(f"{self.name}: sampling needs a finite positive mass above a positive cut")
        hi = min(hi, self._cutoff(lo, total))
        grid = np.geomspace(lo, hi, self.table_size)
        dens = np.array([self.density(x) for x in grid])
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(grid))])
        cdf /= cdf[-1]
        return np.interp(rng.random(size), cdf, grid)

    def tilted(self, kappa):
        base = self.density
        return replace(self, density=lambda z: base(z) * math.exp(-kappa * z), name=f"{self.name}*exp(-{kappa}z)")

    def has_finite_xlogx(self):
        lo = max(1.0, self.lower)
        return _tail_converges(lambda z: z * math.log(z) * self.density(z), lo, self.upper)


def _tail_converges(func, lower, upper, tol=1e-8, max_cutoff=1e8):
    """Doubling-cutoff convergence check for the integral of ``func`` from ``lower`` to ``upper``."""
    if math.isfinite(upper):
        return math.isfinite(_quad(func, lower, upper))
    x = max(2.0 * lower, lower + 1.0)
    previous = _quad(func, lower, x)
    while x < max_cutoff:
        increment = _quad(func, x, 2.0 * x)
        x *= 2.0
        if abs(increment) < tol * max(1.0, abs(previous)):
            return True
        previous += increment
    return False
