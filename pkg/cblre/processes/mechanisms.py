"""
Branching and immigration mechanisms, and the checkable hypotheses of the model.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import special

from ..utils.errors import HypothesisError, ValidationError
from .constants import EULER_GAMMA, INTCOND_INCREMENT_TOL, INTCOND_MAX_CUTOFF
from .jumps import CompoundPoisson, JumpMeasure, PowerLawDensity
from .logging import log_numerical_event

logger = logging.getLogger(__name__)

INF = math.inf
FAMILIES = ('feller', 'stable', 'finite_activity', 'neveu', 'general')


def _finite(value):
    return value is not None and math.isfinite(value)


@dataclass(frozen=True)
class BranchingMechanism:
    """
    ψ(λ) = -q - aλ + γ²λ² + ∫(e^{-λx} - 1 + λx 1_{x<1}) μ(dx).

    ``stable_alpha`` and ``stable_c`` are set by ``stable()`` and select the closed form cλ^α.
    """

    a: float = 0.0
    gamma2: float = 0.0
    mu: Optional[JumpMeasure] = None
    q: float = 0.0
    family: str = 'general'
    stable_alpha: Optional[float] = None
    stable_c: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"mech.family must be one of {FAMILIES}, got {self.family!r}", key='mech.family')
        if not self.gamma2 >= 0:
            raise ValidationError(f"mech.gamma2 must be >= 0, got {self.gamma2}", key='mech.gamma2')
        if not self.q >= 0:
            raise ValidationError(f"mech.q must be >= 0, got {self.q}", key='mech.q')
        if self.mu is not None:
            if not self.mu.positive:
                raise ValidationError("branching measure must live on (0, inf)", key='mech.jumps')
            small = self.mu.second_moment(0.0, 1.0)
            large = self.mu.mass(1.0, INF, closed=(True, False))
            if not (math.isfinite(small) and math.isfinite(large)):
                raise ValidationError("branching measure must integrate 1 ∧ z²", key='mech.jumps')

    # -- evaluation ---------------------------------------------------------------------------
    def _jump_integral(self, lam, centered):
        """∫(e^{-λx} - 1 + λx 1_{x<1}) μ(dx), or with λx on the whole line when ``centered``."""
        mu = self.mu
        if mu is None or lam == 0:
            return 0.0
        mass = mu.mass()
        if math.isfinite(mass):
            linear = mu.first_moment() if centered else mu.first_moment(0.0, 1.0)
            return mu.exp_integral(-lam) - mass + lam * linear
        if centered:
            return mu.integrate(lambda x: math.expm1(-lam * x) + lam * x)
        return mu.integrate(lambda x: math.expm1(-lam * x) + (lam * x if x < 1.0 else 0.0))

    def psi(self, lam):
        if lam < 0:
            raise ValidationError(f"psi needs lambda >= 0, got {lam}")
        if self.family == 'stable':
            return -self.q + self.stable_c * lam ** self.stable_alpha
        if self.family == 'neveu':
            return -self.q + (lam * math.log(lam) if lam > 0 else 0.0)
        return -self.q - self.a * lam + self.gamma2 * lam * lam + self._jump_integral(lam, centered=False)

    def psi_prime0(self):
        """ψ'(0+) = -a - ∫_{[1,∞)} x μ(dx); -inf when the integral diverges."""
        return self._psi_prime0

    @cached_property
    def _psi_prime0(self):
        if self.family == 'stable':
            return 0.0 if self.stable_alpha > 1 else -INF
        if self.family == 'neveu':
            return -INF
        if self.mu is None:
            return -self.a
        return -self.a - self.mu.first_moment(1.0, INF, closed=(True, False))

    @property
    def h_holds(self):
        """Condition (H): q = 0 and a finite offspring mean."""
        return self.q == 0 and _finite(self.psi_prime0())

    def require_h(self):
        if self.q != 0:
            raise HypothesisError("(H) needs q = 0", key='mech.q')
        if not _finite(self.psi_prime0()):
            raise HypothesisError("(H) fails: the integral of x over [1, inf) against mu is infinite", key='mech')

    def psi0(self, lam):
        """ψ₀(λ) = ψ(λ) - λψ'(0+) = γ²λ² + ∫(e^{-λx} - 1 + λx) μ(dx)."""
        self.require_h()
        if lam < 0:
            raise ValidationError(f"psi0 needs lambda >= 0, got {lam}")
        if lam == 0:
            return 0.0
        if self.family == 'stable':
            return self.stable_c * lam ** self.stable_alpha
        value = self.gamma2 * lam * lam + self._jump_integral(lam, centered=True)
        return max(value, 0.0)

    def Phi(self, lam):
        """Φ(λ) = ψ₀(λ)/λ with Φ(0) = 0."""
        if lam == 0:
            self.require_h()
            return 0.0
        return self.psi0(lam) / lam

    def jump_cut_rate(self, cut):
        """Mass of μ on [cut, ∞)."""
        if self.mu is None:
            return 0.0
        return self.mu.mass(cut, INF, closed=(True, False))

    def describe(self):
        if self.family == 'stable':
            return f"stable(alpha={self.stable_alpha}, c={self.stable_c})"
        return f"{self.family}(a={self.a}, gamma2={self.gamma2}, q={self.q}, mu={self.mu!r})"


def feller(a=0.0, gamma2=1.0):
    return BranchingMechanism(a=a, gamma2=gamma2, family='feller')


def finite_activity(rate, law, a=0.0, gamma2=0.0, q=0.0):
    return BranchingMechanism(a=a, gamma2=gamma2, mu=CompoundPoisson(rate, law), q=q, family='finite_activity')


def stable(alpha, c):
    """
    ψ(λ) = cλ^α. For α ∈ (0,1) ∪ (1,2) the mechanism also carries the Lévy measure
    C x^{-1-α} dx with C = cα(α-1)/Γ(2-α) and the matching linear coefficient, so the SDE
    integrator can simulate it.
    """
    if not (0 < alpha < 1 or 1 < alpha <= 2):
        raise ValidationError(f"stable alpha must lie in (0,1) or (1,2], got {alpha}", key='mech.alpha')
    if not c * (alpha - 1) > 0:
        raise ValidationError(f"stable mechanism needs c(alpha-1) > 0, got c={c}, alpha={alpha}", key='mech.c')
    if alpha == 2:
        return BranchingMechanism(a=0.0, gamma2=c, family='stable', stable_alpha=2.0, stable_c=c)
    density_const = c * alpha * (alpha - 1) / special.gamma(2 - alpha)
    if alpha > 1:
        a = -density_const / (alpha - 1)
    else:
        a = density_const / (1 - alpha)
    mu = PowerLawDensity(c_pos=density_const, c_neg=0.0, alpha=alpha, eps=0.0, upper=INF)
    return BranchingMechanism(a=a, gamma2=0.0, mu=mu, family='stable', stable_alpha=alpha, stable_c=c)


def neveu():
    """ψ(λ) = λ log λ: μ(dx) = x^{-2} dx and a = γ_E - 1."""
    mu = PowerLawDensity(c_pos=1.0, c_neg=0.0, alpha=1.0, eps=0.0, upper=INF)
    return BranchingMechanism(a=EULER_GAMMA - 1.0, gamma2=0.0, mu=mu, family='neveu')


@dataclass(frozen=True)
class ImmigrationMechanism:
    """φ(u) = d u + ∫(1 - e^{-ut}) ν(dt)."""

    d: float = 0.0
    nu: Optional[JumpMeasure] = None

    def __post_init__(self):
        if not self.d >= 0:
            raise ValidationError(f"imm.d must be >= 0, got {self.d}", key='imm.d')
        if self.nu is not None:
            if not self.nu.positive:
                raise ValidationError("immigration measure must live on (0, inf)", key='imm.jumps')
            small = self.nu.first_moment(0.0, 1.0)
            large = self.nu.mass(1.0, INF, closed=(True, False))
            if not (math.isfinite(small) and math.isfinite(large)):
                raise ValidationError("immigration measure must integrate 1 ∧ z", key='imm.jumps')

    @property
    def trivial(self):
        return self.d == 0 and self.nu is None

    def phi(self, u):
        if u < 0:
            raise ValidationError(f"phi needs u >= 0, got {u}")
        value = self.d * u
        if self.nu is None or u == 0:
            return value
        mass = self.nu.mass()
        if math.isfinite(mass):
            return value + mass - self.nu.exp_integral(-u)
        return value + self.nu.integrate(lambda t: -math.expm1(-u * t))


@dataclass
class HypothesisReport:
    h_holds: bool
    psi_prime0: float
    env_mean: float
    regime: str
    xlogx_holds: Optional[bool] = None
    intcond_estimate: Optional[float] = None
    intcond_converged: Optional[bool] = None
    intcond_cutoff: Optional[float] = None
    a_evaluable: bool = False
    admissible_abc: bool = False
    notes: list = field(default_factory=list)

    @property
    def intcond_status(self):
        if self.intcond_converged is None:
            return 'not-evaluated'
        return 'convergent' if self.intcond_converged else 'likely-divergent'

    def as_dict(self):
        return {
            'H_holds': self.h_holds,
            'psi_prime0': self.psi_prime0,
            'env_mean': self.env_mean,
            'regime': self.regime,
            'xlogx_holds': self.xlogx_holds,
            'intcond_estimate': self.intcond_estimate,
            'intcond_status': self.intcond_status,
            'intcond_cutoff': self.intcond_cutoff,
            'A_evaluable': self.a_evaluable,
            'admissible_abc': self.admissible_abc,
            'notes': '; '.join(self.notes),
        }


def environment_mean(mech, env_triplet):
    """E[K_1] for the auxiliary process K built from ``env_triplet`` and ``mech``."""
    if env_triplet.variant == 'K':
        return env_triplet.mean()
    return env_triplet.mean() - mech.psi_prime0()


def A_T_U(env_triplet):
    """
    Returns the functions A, T and U of the environment:

    A(x) = m + π((1,∞)) + ∫₁^x π((y,∞)) dy, T(x) = π((x,∞)) + π((-∞,-x)),
    U(x) = σ² + ∫_{|z|≤x} z² π(dz).
    """
    components = env_triplet.components
    m = env_triplet.drift
    variance = env_triplet.total_variance_rate
    upper_tail_at_one = sum(c.mass(1.0, INF) for c in components)

    def tail_integral(x):
        def kernel(z):
            return max(min(z, x) - 1.0, 0.0) - max(min(z, 1.0) - x, 0.0)
        return sum(c.integrate(kernel, min(x, 1.0), INF) for c in components)

    def A(x):
        return m + upper_tail_at_one + tail_integral(x)

    def T(x):
        return sum(c.mass(x, INF) + c.mass(-INF, -x) for c in components)

    def U(x):
        return variance + sum(c.second_moment(-x, x, closed=(True, True)) for c in components)

    return A, T, U


def _intcond(mech, A, start):
    """
    Stieltjes sum of x/A(x) |dΦ(e^{-x})| from ``start``, doubling the cutoff until the increment
    is below tolerance. Returns (estimate, converged, cutoff).
    """
    def piece(lo, hi, points=257):
        xs = np.linspace(lo, hi, points)
        phis = np.array([mech.Phi(math.exp(-x)) for x in xs])
        mids = 0.5 * (xs[1:] + xs[:-1])
        weights = np.array([x / A(x) for x in mids])
        return float(np.sum(weights * np.abs(np.diff(phis))))

    cutoff = max(2.0 * start, start + 1.0)
    total = piece(start, cutoff)
    while cutoff < INTCOND_MAX_CUTOFF:
        increment = piece(cutoff, 2.0 * cutoff)
        total += increment
        cutoff *= 2.0
        if increment < INTCOND_INCREMENT_TOL:
            return total, True, cutoff
    log_numerical_event('intcond_divergent', f"cutoff={cutoff}, estimate={total:.6g}", severity='low')
    return total, False, cutoff


def admissibility_notes(mech, env_triplet, imm=None, beta=None):
    """
    Failures of the admissibility and regularity conditions for the coefficients of the branching
    equation; an empty list means they hold.

    b(x) = d + a x - β(x) must have b(0) >= 0 with β continuous non-decreasing; the big jumps of μ,
    the negative jumps below -1 of the environment and ν integrated against 1 ∧ z must have finite
    mass; μ on (0, 1) and the environment on (-1, 1) must integrate z².
    """
    notes = []
    d = imm.d if imm is not None else 0.0
    if beta is not None:
        if not beta.admissible():
            notes.append('competition is not continuous non-decreasing with beta(0) = 0')
        elif d - float(beta(0.0)) < 0:
            notes.append('drift b(0) = d - beta(0) is negative')
    if mech.mu is not None:
        if not math.isfinite(mech.mu.mass(1.0, INF, closed=(True, False))):
            notes.append('branching measure has infinite mass on [1, inf)')
        if not math.isfinite(mech.mu.second_moment(0.0, 1.0)):
            notes.append('branching measure does not integrate z^2 on (0, 1)')
    for i, component in enumerate(env_triplet.components):
        if not math.isfinite(component.mass(-INF, -1.0, closed=(False, True))):
            notes.append(f"environment jumps.{i} has infinite mass on (-inf, -1]")
        if not math.isfinite(component.second_moment(-1.0, 1.0)):
            notes.append(f"environment jumps.{i} does not integrate z^2 on (-1, 1)")
    if imm is not None and imm.nu is not None:
        small = imm.nu.first_moment(0.0, 1.0)
        large = imm.nu.mass(1.0, INF, closed=(True, False))
        if not (math.isfinite(small) and math.isfinite(large)):
            notes.append('immigration measure does not integrate 1 ∧ z')
    return notes


def check_hypotheses(mech, env_triplet, imm=None, beta=None):
    """
    Evaluates (H), the x log x condition, the integral condition, the admissibility conditions
    of the model and the regime of the environment.
    """
    notes = []
    psi_prime0 = mech.psi_prime0()
    h_holds = mech.h_holds
    if not h_holds:
        notes.append('(H) fails: psi_prime0 infinite or q > 0')
    if env_triplet.variant == 'K' or h_holds:
        env_mean = environment_mean(mech, env_triplet)
    else:
        env_mean = math.nan
    if math.isnan(env_mean):
        regime = 'undetermined'
    elif abs(env_mean) <= 1e-12:
        regime = 'critical'
    elif env_mean > 0:
        regime = 'supercritical'
    else:
        regime = 'subcritical'

    xlogx = True if mech.mu is None else mech.mu.has_finite_xlogx()

    a_evaluable = False
    estimate = converged = cutoff = None
    try:
        k_triplet = env_triplet
        if env_triplet.variant != 'K' and h_holds:
            k_triplet = env_triplet.with_drift(env_triplet.drift - psi_prime0)
        A, _, _ = A_T_U(k_triplet)
        a_evaluable = math.isfinite(A(1.0))
        if regime == 'supercritical' and h_holds:
            start = 1.0
            while A(start) <= 0 and start < INTCOND_MAX_CUTOFF:
                start *= 2.0
            if A(start) > 0:
                estimate, converged, cutoff = _intcond(mech, A, start)
            else:
                notes.append('A(x) not positive below the cutoff')
    except (ValueError, ArithmeticError) as exc:
        notes.append(f"A(x) not evaluable: {exc}")

    failures = admissibility_notes(mech, env_triplet, imm, beta)
    notes.extend(failures)
    admissible = not failures
    report = HypothesisReport(
        h_holds=h_holds, psi_prime0=psi_prime0, env_mean=env_mean, regime=regime, xlogx_holds=xlogx,
        intcond_estimate=estimate, intcond_converged=converged, intcond_cutoff=cutoff,
        a_evaluable=a_evaluable, admissible_abc=admissible, notes=notes)
    logger.info(f"Hypotheses for {mech.describe()}: regime={regime}, H={h_holds}, xlogx={xlogx}")
    return report

