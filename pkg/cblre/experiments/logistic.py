import math

import numpy as np

from ..processes.logistic import (
    LogisticConfig, empirical_order, exact_solution, first_passage_laplace, stationary_moment, strong_errors,
    time_average,
)
from ..processes.montecarlo import MCAccumulator
from ..runner import experiment
from ..utils.validation import validate_experiment
from .builders import build_environment

CONVERGENCE_FACTORS = (16, 32, 64, 128)


def _logistic_config(params, horizon=None):
    section = params.get('logistic', {})
    a = section.get('a', 0.0)
    env_section = params.get('env', {})
    # K = K0 + a t: ψ(λ) = -aλ gives ψ'(0+) = -a
    triplet = build_environment({**params, 'env': {**env_section, 'psi_prime0': -a}}, variant='K')
    return LogisticConfig(z0=section.get('z0', params.get('z0', 1.0)), a=a, k=section.get('k', 1.0), env=triplet,
                          horizon=horizon if horizon is not None else params['T'], dt=params['dt'])


@experiment('logistic')
@validate_experiment
def verify_logistic(run):
    """Stationary moments and time averages of the logistic model from its explicit solution."""
    params = run.params
    config = _logistic_config(params)
    n_paths = params.get('mc', {}).get('n_paths', 2000)
    moments = params.get('logistic', {}).get('moments', 2)

    finals = np.empty(n_paths)
    averages = np.empty(n_paths)
    first = None
    for i in range(n_paths):
        path = config.sample_k_path(run.stream.generator('env', i))
        trajectory = exact_solution(path, config.z0, config.k)
        finals[i] = trajectory.final
        averages[i] = time_average(path, config.z0, config.k)
        if first is None:
            first = trajectory
    run.write_csv('trajectory.csv', ['t', 'z'], zip(first.times, first.values))

    rows = []
    for n in range(1, moments + 1):
        formula = stationary_moment(config.env, config.k, n)
        mc = float(np.mean(finals ** n))
        rows.append((n, formula, mc, abs(mc - formula) / abs(formula)))
    run.write_csv('moments.csv', ['n', 'formula', 'mc', 'rel_err'], rows)

    average = MCAccumulator.from_values(averages).estimate()
    run.summary.update({
        'n_paths': n_paths,
        'mean_K1': config.env.mean(),
        'time_average_mc': average.mean,
        'time_average_se': average.se,
        'time_average_limit': config.env.mean() / config.k,
    })
    for n, formula, mc, rel in rows:
        run.summary[f"moment_{n}_rel_err"] = rel

    if params.get('logistic', {}).get('convergence', False):
        fine_dt = config.dt / CONVERGENCE_FACTORS[0]
        fine = LogisticConfig(z0=config.z0, a=config.a, k=config.k, env=config.env, horizon=config.horizon,
                              dt=fine_dt)
        errors = strong_errors(fine, fine.sample_k_path(run.stream.generator('convergence', 0)),
                               CONVERGENCE_FACTORS)
        run.write_csv('convergence.csv', ['dt', 'sup_error'], ((fine_dt * f, errors[f]) for f in CONVERGENCE_FACTORS))
        run.summary['strong_order'] = empirical_order(errors, fine_dt)
    return 0


@experiment('passage')
@validate_experiment
def verify_passage(run):
    """First-passage Laplace transform below b: Esscher formula against direct simulation."""
    params = run.params
    config = _logistic_config(params)
    section = params.get('passage', {})
    lambdas = section.get('lambda', [1.0])
    if not isinstance(lambdas, list):
        lambdas = [lambdas]
    z = section.get('z', config.z0)
    b = section.get('b', 0.5 * z)
    n_paths = section.get('n_paths', 10000)
    horizon = section.get('horizon', config.horizon)
    rows = []
    for lam in lambdas:
        formula, direct = first_passage_laplace(z, b, lam, config.env, config.k, n_paths, horizon, config.dt,
                                                run.stream)
        se = math.hypot(formula.se, direct.se)
        rows.append((lam, formula.mean, direct.mean, se))
    run.write_csv('passage.csv', ['lambda', 'formula', 'direct', 'se'], rows)
    run.summary.update({
        'z': z, 'b': b, 'k': config.k, 'n_paths': n_paths,
        'max_abs_dev_in_se': max((abs(f - d) / se if se > 0 else abs(f - d)) for _, f, d, se in rows),
    })
    return 0
