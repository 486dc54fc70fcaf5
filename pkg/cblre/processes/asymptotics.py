"""
Long-term behaviour of branching processes in a Lévy environment.

The regime follows the sign of E[K_1]; the central limit theorem for log Z_t on survival and the
extinction and W-dichotomy harnesses are checked by simulation.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats

from ..utils.errors import DomainError, ValidationError
from .constants import DONEY_MALLER_POINTS, MIN_SURVIVORS, SURVIVAL_THRESHOLD, SURVIVAL_THRESHOLD_SENSITIVITY
from .mechanisms import A_T_U, check_hypotheses
from .montecarlo import MCAccumulator
from .sde import FinalValue, simulate_ensemble

logger = logging.getLogger(__name__)

REGIMES = ('extinction_as', 'liminf_zero', 'survival_possible', 'undetermined')
CRITICAL_TOL = 1e-12


@dataclass
class RegimeReport:
    env_mean: float
    drift_sign: int
    regime: str
    intcond_status: str
    xlogx_holds: Optional[bool]
    w_positive: Optional[object] = None
    hypotheses: object = field(default=None, repr=False)

    def as_dict(self):
        out = {
            'env_mean': self.env_mean,
            'drift_sign': self.drift_sign,
            'regime': self.regime,
            'intcond_status': self.intcond_status,
            'xlogx_holds': self.xlogx_holds,
        }
        if self.w_positive is not None:
            out['w_positive'] = self.w_positive.mean
            out['w_positive_se'] = self.w_positive.se
        if self.hypotheses is not None:
            out['notes'] = '; '.join(self.hypotheses.notes)
        return out


def k_triplet(mech, env_triplet):
    """Triplet of K built from an S/K0 triplet and the mechanism (requires (H))."""
    if env_triplet.variant == 'K':
        return env_triplet
    mech.require_h()
    return replace(env_triplet, drift=env_triplet.drift - mech.psi_prime0(), variant='K',
                   psi_prime0=mech.psi_prime0())


def classify(mech, env_triplet, imm=None, beta=None, w_positive=None):
    """
    Extinction almost surely when K drifts to -inf, liminf zero when it oscillates, and possible
    survival when it drifts to +inf and the integral condition converges.
    """
    if env_triplet.variant != 'K':
        mech.require_h()
    hypotheses = check_hypotheses(mech, env_triplet, imm, beta)
    mean = hypotheses.env_mean
    if abs(mean) <= CRITICAL_TOL:
        sign, regime = 0, 'liminf_zero'
    elif mean < 0:
        sign, regime = -1, 'extinction_as'
    else:
        sign = 1
        regime = 'survival_possible' if hypotheses.intcond_status == 'convergent' else 'undetermined'
    logger.info(f"Regime: E[K_1]={mean:.6g} -> {regime}")
    return RegimeReport(
        env_mean=mean, drift_sign=sign, regime=regime, intcond_status=hypotheses.intcond_status,
        xlogx_holds=hypotheses.xlogx_holds, w_positive=w_positive, hypotheses=hypotheses)


def clt_normalizers(env_triplet_k, t):
    """a(t) = E[K_1] t and b(t)² = Var(K_1) t when the jump measure has a second moment."""
    if t < 0:
        raise ValidationError(f"t must be >= 0, got {t}", key='t')
    variance = env_triplet_k.variance()
    if not math.isfinite(variance):
        raise DomainError("Doney–Maller general normalizers not implemented", key='jumps')
    return env_triplet_k.mean() * t, math.sqrt(variance * t)


def doney_maller_ratio(env_triplet, points=DONEY_MALLER_POINTS):
    """U(x) / (x² T(x)) at each x; infinite where the tail T(x) vanishes."""
    _, T, U = A_T_U(env_triplet)
    ratios = {}
    for x in points:
        tail = T(x)
        ratios[x] = U(x) / (x * x * tail) if tail > 0 else math.inf
    return ratios


def _terminal_values(config, n_paths, seed, threads):
    """Z_T and K_T over ``n_paths`` independent environments, one replicate each."""
    result = simulate_ensemble(config, n_paths, 1, seed, FinalValue(), threads=threads, keep_paths=True)
    finals = np.concatenate(result.per_env_values)
    shift = -config.mech.psi_prime0()
    k_terminal = np.array([p.terminal_value + shift * p.horizon for p in result.env_paths])
    return finals, k_terminal


@dataclass
class CLTReport:
    t: float
    a: float
    b: float
    n_paths: int
    survivors: int
    exploded: int
    statistic: float
    p_value: float
    inconclusive: bool
    sensitivity: dict = field(default_factory=dict)
    samples: np.ndarray = field(default=None, repr=False)

    def as_dict(self):
        out = {
            't': self.t, 'a': self.a, 'b': self.b, 'n_paths': self.n_paths, 'survivors': self.survivors,
            'exploded': self.exploded, 'ks_statistic': self.statistic, 'ks_p_value': self.p_value,
            'inconclusive': self.inconclusive,
        }
        for threshold, (count, p) in self.sensitivity.items():
            out[f"survivors@{threshold:g}"] = count
            out[f"ks_p_value@{threshold:g}"] = p
        return out


def _ks(standardized):
    if standardized.size < MIN_SURVIVORS:
        return math.nan, math.nan
    result = stats.kstest(standardized, 'norm')
    return float(result.statistic), float(result.pvalue)


def clt_check(config, t, n_paths, seed, threshold=SURVIVAL_THRESHOLD, threads=1):
    """
    Kolmogorov–Smirnov test of (log Z_t - a(t)) / b(t) against N(0, 1) on the paths with
    Z_t above ``threshold``, the proxy for {W > 0}.
    """
    config = replace(config, horizon=t)
    env_k = k_triplet(config.mech, config.env)
    if not env_k.mean() > CRITICAL_TOL:
        raise ValidationError("the central limit check needs a supercritical environment", key='env')
    a, b = clt_normalizers(env_k, t)
    if b == 0:
        raise ValidationError("degenerate normalizer b(t) = 0: the environment has no randomness", key='env')

    finals, _ = _terminal_values(config, n_paths, seed, threads)
    exploded = int(np.isinf(finals).sum())
    finite = finals[np.isfinite(finals)]
    with np.errstate(divide='ignore'):
        logs = np.log(finite)

    sensitivity = {}
    for level in SURVIVAL_THRESHOLD_SENSITIVITY:
        kept = (logs[finite > level] - a) / b
        sensitivity[level] = (int(kept.size), _ks(kept)[1])
    standardized = (logs[finite > threshold] - a) / b
    statistic, p_value = _ks(standardized)
    inconclusive = standardized.size < MIN_SURVIVORS
    if inconclusive:
        logger.warning(f"CLT check inconclusive: {standardized.size} survivors out of {n_paths}")
    else:
        logger.info(f"CLT check at t={t}: KS statistic={statistic:.4f}, p={p_value:.4f}")
    return CLTReport(
        t=t, a=a, b=b, n_paths=n_paths, survivors=int(standardized.size), exploded=exploded,
        statistic=statistic, p_value=p_value, inconclusive=inconclusive, sensitivity=sensitivity,
        samples=standardized)


def extinction_fraction(config, n_paths, seed, threshold=SURVIVAL_THRESHOLD, threads=1):
    """Estimate of P(Z_T < threshold), one replicate per environment."""
    finals, _ = _terminal_values(config, n_paths, seed, threads)
    estimate = MCAccumulator.from_values((finals < threshold).astype(float)).estimate(threshold=threshold)
    logger.info(f"Extinction fraction at T={config.horizon}: {estimate.mean:.4f}")
    return estimate


@dataclass
class WDichotomyReport:
    agreement: float
    w_positive: object
    n_paths: int
    threshold: float

    def as_dict(self):
        return {'agreement': self.agreement, 'w_positive': self.w_positive.mean,
                'w_positive_se': self.w_positive.se, 'n_paths': self.n_paths, 'threshold': self.threshold}


def w_dichotomy(config, n_paths, seed, threshold=SURVIVAL_THRESHOLD, threads=1):
    """
    Compares {Z_T e^{-K_T} < threshold} with {Z_T < threshold} path by path.
    """
    config.mech.require_h()
    finals, k_terminal = _terminal_values(config, n_paths, seed, threads)
    with np.errstate(divide='ignore', invalid='ignore'):
        log_w = np.where(finals > 0, np.log(finals) - k_terminal, -np.inf)
    w_small = log_w < math.log(threshold)
    z_small = finals < threshold
    agreement = float(np.mean(w_small == z_small))
    w_positive = MCAccumulator.from_values((~w_small).astype(float)).estimate()
    logger.info(f"W dichotomy at T={config.horizon}: agreement={agreement:.4f}, P(W>0)~{w_positive.mean:.4f}")
    return WDichotomyReport(agreement=agreement, w_positive=w_positive, n_paths=n_paths, threshold=threshold)
