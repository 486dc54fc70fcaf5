from ..processes.asymptotics import classify, clt_check, doney_maller_ratio, k_triplet, w_dichotomy
from ..runner import experiment
from ..utils.validation import validate_experiment
from .builders import build_competition, build_environment, build_immigration, build_mechanism, build_sde_config


@experiment('clt')
@validate_experiment
def verify_clt(run):
    """Kolmogorov–Smirnov check of the central limit theorem for log Z_t on survival."""
    params = run.params
    section = params.get('clt', {})
    t = section.get('t', params.get('T', 50.0))
    config = build_sde_config(params, horizon=t, settings=run.settings)
    threshold = params.get('numerics', {}).get('threshold', 1e-6)
    report = clt_check(config, t, section.get('n_paths', 2000), run.stream, threshold=threshold,
                       threads=run.threads)
    run.write_csv('clt_samples.csv', ['standardized_log_z'], ((x,) for x in report.samples))
    run.summary.update(report.as_dict())
    return 0


@experiment('classify')
@validate_experiment
def classify_regime(run):
    """Long-term regime from the drift of K, with the hypothesis checks and an optional W-dichotomy run."""
    params = run.params
    mech = build_mechanism(params)
    env = build_environment(params, mech)
    w_report = None
    n_paths = params.get('mc', {}).get('n_paths')
    if n_paths and 'T' in params and 'dt' in params:
        config = build_sde_config(params, mech=mech, settings=run.settings)
        w_report = w_dichotomy(config, n_paths, run.stream, threads=run.threads)
    report = classify(mech, env, build_immigration(params), build_competition(params),
                      w_positive=w_report.w_positive if w_report else None)
    run.summary.update(report.as_dict())
    run.summary['admissible_abc'] = report.hypotheses.admissible_abc
    if w_report is not None:
        run.summary['w_agreement'] = w_report.agreement
    ratios = doney_maller_ratio(k_triplet(mech, env))
    run.write_csv('doney_maller.csv', ['x', 'ratio'], sorted(ratios.items()))
    return 0
