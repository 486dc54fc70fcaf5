import math

import numpy as np

from ..processes.laplace import identity_check, neveu_extinction, neveu_v, solve_v, stable_probs
from ..processes.levy import sample_path
from ..processes.mechanisms import check_hypotheses, neveu, stable
from ..processes.sde import Survival, simulate_ensemble
from ..runner import experiment
from ..utils.errors import ValidationError
from ..utils.validation import validate_experiment
from .builders import build_environment, build_sde_config


@experiment('verify-laplace')
@validate_experiment
def verify_laplace(run):
    """Monte Carlo conditional Laplace functional against the backward ODE, environment by environment."""
    params = run.params
    config = build_sde_config(params, settings=run.settings)
    report = check_hypotheses(config.mech, config.env, config.imm, config.beta)
    if not report.h_holds:
        raise ValidationError("verify-laplace needs (H): psi'(0+) finite and q = 0", key='mech')
    mc = params.get('mc', {})
    laplace = params.get('laplace', {})
    if mc.get('n_branch', 2000) < 2:
        raise ValidationError("mc.n_branch must be >= 2 for per-environment estimates", key='mc.n_branch')
    result = identity_check(config, laplace.get('lambda', 1.0), mc.get('n_env', 200), mc.get('n_branch', 2000),
                            run.stream, threads=run.threads, centered=laplace.get('centered', True))
    run.write_csv('identity.csv', ['env_id', 'mc', 'closed_form', 'se'],
                  ((r['env_id'], r['mc'], r['closed_form'], r['se']) for r in result.rows))
    run.summary.update(result.summary())
    run.summary['regime'] = report.regime
    return 0


@experiment('neveu')
@validate_experiment
def verify_neveu(run):
    """Explicit Neveu solution against the uncentered backward ODE, and the extinction probability."""
    params = run.params
    mech = neveu()
    triplet = build_environment(params, variant='K0')
    section = params.get('neveu', {})
    mc = params.get('mc', {})
    t = params.get('T', 1.0)
    dt = params.get('dt', 0.01)
    lam = section.get('lambda', 1.0)
    max_step = params.get('numerics', {}).get('max_step', 1e-3)
    rows = []
    for i in range(mc.get('n_env', 20)):
        path = sample_path(triplet, t, dt, run.stream.generator('env', i))
        closed = neveu_v(path, t, lam)
        numeric = solve_v(path, t, lam, mech, centered=False, max_step=max_step).v0
        rows.append((i, closed, numeric, abs(numeric - closed) / closed))
    run.write_csv('neveu_v.csv', ['env_id', 'closed_form', 'ode', 'rel_err'], rows)
    estimate = neveu_extinction(section.get('z', 1.0), triplet, section.get('t_trunc', 40.0),
                                section.get('n_mc', 1000), run.stream, dt=dt, threads=run.threads)
    run.summary.update({
        'n_env': len(rows),
        'max_rel_err': max(r[3] for r in rows),
        'extinction_probability': estimate.mean,
        'extinction_se': estimate.se,
        'truncation_bound': estimate.diagnostics['truncation_bound'],
    })
    return 0


class _NonExplosion:
    name = 'non_explosion'

    def __call__(self, batch, env_path):
        return np.isfinite(batch.final).astype(float)


@experiment('stable')
@validate_experiment
def verify_stable(run):
    """Per-environment survival (α > 1) or non-explosion (α < 1) against the explicit formula."""
    params = run.params
    section = params.get('stable', {})
    alpha, c = section.get('alpha', 1.5), section.get('c', 1.0)
    mech = stable(alpha, c)
    config = build_sde_config(params, mech=mech, settings=run.settings)
    threshold = params.get('numerics', {}).get('threshold', 1e-6)
    reducer = Survival(threshold) if alpha > 1 else _NonExplosion()
    mc = params.get('mc', {})
    if mc.get('n_branch', 500) < 2:
        raise ValidationError("mc.n_branch must be >= 2 for per-environment estimates", key='mc.n_branch')
    ensemble = simulate_ensemble(config, mc.get('n_env', 20), mc.get('n_branch', 500), run.stream, reducer,
                                 threads=run.threads, keep_paths=True)
    rows = []
    for i, (path, estimate) in enumerate(zip(ensemble.env_paths, ensemble.per_env)):
        survival, non_explosion = stable_probs(config.z0, path, config.horizon, alpha, c)
        closed = survival if alpha > 1 else non_explosion
        rows.append((i, estimate.mean, closed, estimate.se))
    run.write_csv('stable.csv', ['env_id', 'mc', 'closed_form', 'se'], rows)
    closed_mean = float(np.mean([r[2] for r in rows]))
    pooled = ensemble.pooled
    run.summary.update({
        'quantity': 'survival' if alpha > 1 else 'non_explosion',
        'pooled_mc': pooled.mean,
        'pooled_se': pooled.se,
        'closed_form_mean': closed_mean,
        'within_3se': abs(pooled.mean - closed_mean) <= 3.0 * pooled.se if pooled.se > 0 else
        math.isclose(pooled.mean, closed_mean),
    })
    return 0
