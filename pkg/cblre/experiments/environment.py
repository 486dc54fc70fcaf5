import math

import numpy as np

from ..processes.constants import STATUS_ALIVE, STATUS_NAMES
from ..processes.levy import sample_path
from ..processes.sde import simulate_batch
from ..runner import experiment
from ..utils.validation import validate_experiment
from .builders import build_environment, build_mechanism, build_sde_config


def status_column(times, status, event_time):
    """Per-row status: ``alive`` before the event time, the terminal status from it on."""
    name = STATUS_NAMES[status]
    if status == STATUS_ALIVE or math.isnan(event_time):
        return [STATUS_NAMES[STATUS_ALIVE]] * len(times)
    return [name if t >= event_time else STATUS_NAMES[STATUS_ALIVE] for t in times]


@experiment('sample-env')
@validate_experiment
def sample_env(run):
    """One environment path on the uniform grid refined by its jump times."""
    params = run.params
    mech = build_mechanism(params) if 'mech' in params else None
    triplet = build_environment(params, mech)
    path = sample_path(triplet, params['T'], params['dt'], run.stream.generator('env', 0))
    path.check_consistency()
    rows = zip(path.times, path.values, path.jump_mask.astype(int), path.left_values)
    run.write_csv('env_path.csv', ['time', 'K', 'jump_flag', 'left_value'], rows)
    run.summary.update({
        'variant': triplet.variant,
        'drift': triplet.drift,
        'mean_K1': triplet.mean(),
        'n_cells': path.n_cells,
        'n_jumps': int(path.jump_times.size),
        'terminal_value': path.terminal_value,
    })
    return 0


@experiment('simulate')
@validate_experiment
def simulate_paths(run):
    """Independent trajectories, one environment each; writes (time, Z, status, path_id)."""
    params = run.params
    config = build_sde_config(params, settings=run.settings)
    n_paths = params.get('mc', {}).get('n_paths', 1)
    rows = []
    statuses = []
    finals = []
    for i in range(n_paths):
        path = config.sample_environment(run.stream.generator('env', i))
        batch = simulate_batch(config, path, 1, run.stream.generator('branch', i), record=True)
        status = int(batch.status[0])
        labels = status_column(path.times, status, float(batch.event_time[0]))
        rows.extend((t, z, label, i) for t, z, label in zip(path.times, batch.values[:, 0], labels))
        statuses.append(status)
        finals.append(float(batch.final[0]))
    run.write_csv('trajectories.csv', ['time', 'Z', 'status', 'path_id'], rows)
    finals = np.asarray(finals)
    finite = finals[np.isfinite(finals)]
    run.summary.update({'n_paths': n_paths, 'mean_final_finite': float(finite.mean()) if finite.size else float('nan')})
    for name in sorted(set(STATUS_NAMES.values())):
        codes = [code for code, label in STATUS_NAMES.items() if label == name]
        run.summary[f"fraction_{name}"] = sum(s in codes for s in statuses) / n_paths
    return 0
