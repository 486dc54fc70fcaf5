"""
Pathwise backward equation for the conditional Laplace transform, with the closed forms of the
Neveu and stable cases.

For a fixed path of K the function s -> v_t(s, λ, K) solves

    dv/ds = e^{K_s} ψ₀(v e^{-K_s}),   v(t) = λ,

and E[exp(-λ Z_t e^{-K_t}) | K] = exp(-z v(0) - ∫₀^t φ(v(r) e^{-K_r}) dr). With ``centered=False`` the
equation is driven by K⁰ and the full ψ, which covers mechanisms with infinite mean.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from ..utils.errors import NumericalError, ValidationError
from .constants import (
    ODE_INVARIANT_TOL, ODE_MAX_HALVINGS, ODE_MAX_REFINEMENTS, ODE_MAX_STEP, ODE_RELATIVE_TOL,
)
from .levy import discounted_integral, exp_functional, sample_path, stieltjes_discounted
from .logging import log_numerical_event
from .montecarlo import MCAccumulator, SeedStream, parallel_map
from .sde import LaplaceFunctional, simulate_ensemble

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class VSolution:
    """
    Nodes of the backward solution in increasing ``s``. Cell boundaries appear twice, once with
    the left limit of K and once with its value, so ``k`` is exact on both sides of every jump.
    """

    s: np.ndarray
    v: np.ndarray
    k: np.ndarray
    t: float
    lam: float
    centered: bool
    lower_bound: Optional[np.ndarray] = None
    stats: dict = field(default_factory=dict)
    path: object = field(default=None, repr=False)

    @property
    def v0(self):
        return float(self.v[0])

    def at(self, s):
        """v at time ``s`` (linear between nodes)."""
        return float(np.interp(s, self.s, self.v))


def _drift_rhs(mech, centered):
    """Right-hand side as a function of (v, K): v Φ(v e^{-K}), or v ψ(x)/x with x = v e^{-K}."""
    if centered:
        def rhs(v, k):
            if v <= 0:
                return 0.0
            return v * mech.Phi(v * math.exp(-k))
    else:
        def rhs(v, k):
            if v <= 0:
                return 0.0
            x = v * math.exp(-k)
            return v * mech.psi(x) / x
    return rhs


class _BackwardPass:
    """One integration over every cell of the path with a fixed maximal step."""

    def __init__(self, path, lam, mech, centered, max_step):
        self.path = path
        self.lam = lam
        self.mech = mech
        self.centered = centered
        self.max_step = max_step
        self.rhs = _drift_rhs(mech, centered)
        self.tol = ODE_INVARIANT_TOL * max(lam, 1.0)
        self.steps = 0
        self.rejections = 0
        self.min_step = math.inf

    def _rk4(self, s, v, h, kfun):
        f = self.rhs
        k1 = f(v, kfun(s))
        k2 = f(v - 0.5 * h * k1, kfun(s - 0.5 * h))
        k3 = f(v - 0.5 * h * k2, kfun(s - 0.5 * h))
        k4 = f(v - h * k3, kfun(s - h))
        return v - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def _bound_increment(self, s, h, kfun):
        """Simpson rule for the integral of Φ(λ e^{-K}) over [s - h, s]."""
        phi = self.mech.Phi
        lam = self.lam
        return h / 6.0 * (phi(lam * math.exp(-kfun(s))) + 4.0 * phi(lam * math.exp(-kfun(s - 0.5 * h)))
                          + phi(lam * math.exp(-kfun(s - h))))

    def _valid(self, v_old, v_new, bound):
        if not math.isfinite(v_new) or v_new < -self.tol:
            return False
        if not self.centered:
            return True
        if v_new > v_old + self.tol or v_new > self.lam + self.tol:
            return False
        return bound is None or v_new >= bound - self.tol

    def _advance(self, s, v, h, kfun, bound_int, depth=0):
        """Steps from s to s - h, halving on invariant breach. Returns (v, bound integral)."""
        v_new = self._rk4(s, v, h, kfun)
        new_int = bound_int + self._bound_increment(s, h, kfun) if self.centered else None
        bound = self.lam * math.exp(-new_int) if self.centered else None
        if self._valid(v, v_new, bound):
            self.steps += 1
            self.min_step = min(self.min_step, h)
            if self.centered:
                v_new = min(max(v_new, bound), v, self.lam)
            return max(v_new, 0.0), new_int
        if depth >= ODE_MAX_HALVINGS:
            details = {'s': s, 'step': h, 'v': v, 'v_new': v_new, 'lower_bound': bound, 'lambda': self.lam}
            log_numerical_event('step_underflow', details, severity='high')
            raise NumericalError("backward ODE step underflow: invariants cannot be met", details)
        self.rejections += 1
        v_mid, mid_int = self._advance(s, v, 0.5 * h, kfun, bound_int, depth + 1)
        return self._advance(s - 0.5 * h, v_mid, 0.5 * h, kfun, mid_int, depth + 1)

    def run(self):
        path = self.path
        times, right, left = path.times, path.values, path.left_values
        v = self.lam
        bound_int = 0.0
        s_nodes, v_nodes, k_nodes, lb_nodes, boundary = [], [], [], [], []
        for i in range(path.n_cells - 1, -1, -1):
            t0, t1 = times[i], times[i + 1]
            k0, k1 = right[i], left[i + 1]
            length = t1 - t0
            slope = (k1 - k0) / length

            def kfun(s, k0=k0, t0=t0, slope=slope):
                return k0 + slope * (s - t0)

            n = max(4, int(math.ceil(length / self.max_step)))
            h = length / n
            s_nodes.append(t1)
            v_nodes.append(v)
            k_nodes.append(k1)
            lb_nodes.append(self.lam * math.exp(-bound_int) if self.centered else math.nan)
            for j in range(n):
                s = t1 - j * h
                v, bound_int = self._advance(s, v, h, kfun, bound_int)
                s_nodes.append(t1 - (j + 1) * h if j < n - 1 else t0)
                v_nodes.append(v)
                k_nodes.append(kfun(s - h) if j < n - 1 else k0)
                lb_nodes.append(self.lam * math.exp(-bound_int) if self.centered else math.nan)
            boundary.append(v)
        order = slice(None, None, -1)
        return (np.array(s_nodes)[order], np.array(v_nodes)[order], np.array(k_nodes)[order],
                np.array(lb_nodes)[order], np.array(boundary))


def _prepare_path(path, t, mech, centered):
    if centered:
        if path.variant != 'K':
            mech.require_h()
            path = path.shifted(-mech.psi_prime0(), variant='K')
    elif path.variant == 'K':
        raise ValidationError("the uncentered equation is driven by K0, got a K path", key='env.variant')
    if t > path.horizon + 1e-12:
        raise ValidationError(f"t={t} exceeds the path horizon {path.horizon}", key='t')
    return path.restricted(t)


def solve_v(path, t, lam, mech, centered=True, max_step=ODE_MAX_STEP, tol=ODE_RELATIVE_TOL):
    """
    Classical fourth-order integration backward from s = t, restarted at every cell boundary of
    the path (jump times included), with step rejection on the invariants and a global
    half-step refinement until the Richardson error estimate is below ``tol`` relative to λ.

    A path of variant K0 or S is shifted to K with ψ'(0+) when ``centered``.
    """
    if lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam}", key='lambda')
    if centered:
        mech.require_h()
    work = _prepare_path(path, t, mech, centered)
    if lam == 0:
        s = work.times
        zeros = np.zeros(s.size)
        return VSolution(s=s, v=zeros, k=work.values, t=t, lam=0.0, centered=centered,
                         lower_bound=zeros if centered else None, stats={'steps': 0}, path=work)

    step = min(max_step, ODE_MAX_STEP)
    coarse = _BackwardPass(work, lam, mech, centered, step)
    previous = coarse.run()
    error = math.inf
    passes = [coarse]
    for refinement in range(ODE_MAX_REFINEMENTS + 1):
        step *= 0.5
        fine = _BackwardPass(work, lam, mech, centered, step)
        current = fine.run()
        passes.append(fine)
        error = float(np.max(np.abs(current[4] - previous[4]))) / 15.0 / lam
        previous = current
        if error <= tol:
            break
    else:
        details = {'lambda': lam, 't': t, 'error_estimate': error, 'max_step': step}
        log_numerical_event('richardson_tolerance', details, severity='high')
        raise NumericalError("backward ODE did not reach the requested accuracy", details)

    s, v, k, lb, _ = previous
    last = passes[-1]
    stats = {
        'max_step': step, 'min_step': last.min_step, 'steps': last.steps,
        'rejections': sum(p.rejections for p in passes), 'passes': len(passes),
        'error_estimate': error,
    }
    if stats['rejections']:
        log_numerical_event('step_rejection', f"{stats['rejections']} rejected steps, lambda={lam}", severity='low')
    logger.debug(f"solve_v: t={t}, lambda={lam}, v0={v[0]:.10g}, stats={stats}")
    return VSolution(s=s, v=v, k=k, t=t, lam=lam, centered=centered,
                     lower_bound=lb if centered else None, stats=stats, path=work)


def phi_lower_bound(path, t, lam, mech):
    """λ exp(-∫₀^t Φ(λ e^{-K_u}) du), the lower bound of v(0)."""
    work = _prepare_path(path, t, mech, centered=True)
    values = []
    for i in range(work.n_cells):
        t0, t1 = work.times[i], work.times[i + 1]
        k0, k1 = work.values[i], work.left_values[i + 1]
        slope = (k1 - k0) / (t1 - t0)
        values.append(integrate.quad(lambda u: mech.Phi(lam * math.exp(-(k0 + slope * (u - t0)))), t0, t1,
                                     epsabs=1e-12)[0])
    return lam * math.exp(-sum(values))


def conditional_laplace(path, z, lam, t, mech, imm=None, centered=True, solution=None):
    """exp(-z v(0) - ∫₀^t φ(v(r) e^{-K_r}) dr), the φ-integral by trapezoid on the solution nodes."""
    if z < 0:
        raise ValidationError(f"z must be >= 0, got {z}", key='z0')
    sol = solution or solve_v(path, t, lam, mech, centered=centered)
    exponent = z * sol.v0
    if imm is not None and not imm.trivial:
        phis = np.array([imm.phi(v * math.exp(-k)) for v, k in zip(sol.v, sol.k)])
        exponent += float(np.sum(0.5 * (phis[1:] + phis[:-1]) * np.diff(sol.s)))
    return math.exp(-exponent)


# -- Neveu case ------------------------------------------------------------------------------
def _require_k0(path):
    if path.variant == 'K':
        raise ValidationError("closed forms are driven by K0, got a K path", key='env.variant')


def neveu_v(path_k0, t, lam, s=0.0):
    """v = exp{e^s (∫_s^t e^{-u} K⁰_u du + e^{-t} log λ)}."""
    _require_k0(path_k0)
    if not lam > 0:
        raise ValidationError(f"the Neveu closed form needs lambda > 0, got {lam}", key='lambda')
    if not 0 <= s <= t <= path_k0.horizon + 1e-12:
        raise ValidationError(f"need 0 <= s <= t <= T, got s={s}, t={t}", key='t')
    if s == t:
        return float(lam)
    integral = discounted_integral(path_k0.window(s, min(t, path_k0.horizon)))
    return math.exp(math.exp(s) * (integral + math.exp(-t) * math.log(lam)))


def neveu_laplace(z, lam, path_k0, t):
    """exp{-z λ^{e^{-t}} exp(∫₀^t e^{-s} K⁰_s ds)}."""
    return math.exp(-z * neveu_v(path_k0, t, lam, 0.0))


def neveu_extinction(z, triplet_k0, t_trunc, n_mc, seed, dt=0.01, threads=1):
    """
    Monte Carlo estimate of E[exp(-z e^Y)], Y = ∫₀^T e^{-s} dK⁰_s = e^{-T} K⁰_T + ∫₀^T e^{-s} K⁰_s ds.

    The estimate carries the truncation bound e^{-T} E|K⁰_T| in its diagnostics.
    """
    abs_rate = sum(c.integrate(abs) for c in triplet_k0.components)
    if not math.isfinite(abs_rate):
        raise ValidationError("E|K0_1| is infinite", key='jumps')
    if triplet_k0.mean() > 0:
        log_numerical_event('neveu_interpretation',
                            f"K0 drifts to +inf (mean {triplet_k0.mean():.6g}); not an extinction probability")
    stream = seed if isinstance(seed, SeedStream) else SeedStream(seed)

    def one_path(i):
        path = sample_path(triplet_k0, t_trunc, dt, stream.generator('neveu', i))
        return math.exp(-z * math.exp(stieltjes_discounted(path)))

    acc = MCAccumulator()
    for value in parallel_map(one_path, range(n_mc), threads):
        acc.update(value)
    mean_abs = (abs(triplet_k0.linear_drift) * t_trunc + math.sqrt(triplet_k0.total_variance_rate * t_trunc)
                + abs_rate * t_trunc)
    bound = math.exp(-t_trunc) * mean_abs
    return acc.estimate(truncation_bound=bound, horizon=t_trunc)


# -- stable case -----------------------------------------------------------------------------
def _check_stable(alpha, c):
    if not (0 < alpha < 1 or 1 < alpha <= 2):
        raise ValidationError(f"stable alpha must lie in (0,1) or (1,2], got {alpha}", key='mech.alpha')
    if not c * (alpha - 1) > 0:
        raise ValidationError("stable case needs c(alpha-1) > 0", key='mech.c')


def _stable_functional(path_k0, s, t, alpha):
    """∫_s^t exp(-(α-1) K⁰_u) du."""
    if s == t:
        return 0.0
    return exp_functional(path_k0.window(s, t).scaled(-(alpha - 1.0)), 1)


def stable_v(path_k0, t, s, lam, alpha, c):
    """v = (λ^{1-α} + (α-1)c ∫_s^t e^{-(α-1)K⁰_u} du)^{-1/(α-1)}."""
    _require_k0(path_k0)
    _check_stable(alpha, c)
    if not lam > 0:
        raise ValidationError(f"stable closed form needs lambda > 0, got {lam}", key='lambda')
    base = lam ** (1.0 - alpha) + (alpha - 1.0) * c * _stable_functional(path_k0, s, t, alpha)
    return base ** (-1.0 / (alpha - 1.0))


def stable_probs(z, path_k0, t, alpha, c):
    """(survival, non-explosion) probabilities up to time t given the path."""
    _require_k0(path_k0)
    _check_stable(alpha, c)
    g = ((alpha - 1.0) * c * _stable_functional(path_k0, 0.0, t, alpha)) ** (-1.0 / (alpha - 1.0))
    if alpha > 1:
        return 1.0 - math.exp(-z * g), 1.0
    return 1.0, math.exp(-z * g)


# -- oracles for the environment-free case ---------------------------------------------------
def feller_u(a, gamma2, t, lam):
    """u_t(λ) for ψ(u) = -a u + γ² u²."""
    if a == 0:
        return lam / (1.0 + gamma2 * lam * t)
    growth = math.exp(a * t)
    return a * lam * growth / (a + gamma2 * lam * (growth - 1.0))


def cb_laplace_exponent(mech, t, lam):
    """Numeric solution of du/dt = -ψ(u), u_0 = λ, so that E_z[e^{-λ Z_t}] = e^{-z u_t(λ)}."""
    if lam == 0:
        return 0.0
    sol = integrate.solve_ivp(lambda _, u: [-mech.psi(max(u[0], 0.0))], (0.0, t), [lam],
                              method='DOP853', rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise NumericalError("expectation ODE failed", {'message': sol.message, 't': t, 'lambda': lam})
    return float(sol.y[0, -1])


# -- identity check --------------------------------------------------------------------------
@dataclass
class IdentityReport:
    rows: list
    pooled: object
    mean_abs_rel_dev: float
    fraction_within: float

    def summary(self):
        return {
            'n_env': len(self.rows),
            'pooled_mc': self.pooled.mean,
            'pooled_se': self.pooled.se,
            'closed_form_mean': float(np.mean([r['closed_form'] for r in self.rows])),
            'mean_abs_rel_dev': self.mean_abs_rel_dev,
            'fraction_within_3se': self.fraction_within,
        }


def identity_check(config, lam, n_env, n_branch, seeds, threads=1, centered=True):
    """
    Compares, environment by environment, the Monte Carlo conditional Laplace functional of Z_T
    with ``conditional_laplace`` on the same path.
    """
    shift = -config.mech.psi_prime0() if centered else 0.0
    ensemble = simulate_ensemble(config, n_env, n_branch, seeds, LaplaceFunctional(lam, shift),
                                 threads=threads, keep_paths=True)
    rows = []
    for i, (path, estimate) in enumerate(zip(ensemble.env_paths, ensemble.per_env)):
        closed = conditional_laplace(path, config.z0, lam, config.horizon, config.mech, config.imm, centered)
        rows.append({
            'env_id': i, 'mc': estimate.mean, 'closed_form': closed, 'se': estimate.se,
            'within_3se': abs(estimate.mean - closed) <= 3.0 * estimate.se,
        })
    mards = [abs(r['mc'] - r['closed_form']) / r['closed_form'] for r in rows if r['closed_form'] > 0]
    pooled = ensemble.pooled if len(rows) >= 2 else ensemble.per_env[0]
    report = IdentityReport(
        rows=rows, pooled=pooled,
        mean_abs_rel_dev=float(np.mean(mards)) if mards else math.nan,
        fraction_within=float(np.mean([r['within_3se'] for r in rows])))
    logger.info(f"Identity check: {n_env} envs, mean abs rel dev {report.mean_abs_rel_dev:.4g}, "
                f"within 3 SE {report.fraction_within:.3f}")
    return report
