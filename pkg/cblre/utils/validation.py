"""
Cerberus schemas for experiment configs.

Each experiment kind accepts a fixed set of sections; unknown keys are rejected and every error is
reported under its dotted config key.
"""
from cerberus import Validator

from .errors import ValidationError
from .helpers import parse_law

EXPERIMENT_KINDS = ('sample-env', 'simulate', 'verify-laplace', 'neveu', 'stable', 'logistic', 'passage', 'clt',
                    'classify')


def _positive(field, value, error):
    if not value > 0:
        error(field, 'must be > 0')


def _law(field, value, error):
    try:
        parse_law(value)
    except ValidationError as exc:
        error(field, str(exc))


NUMBER = {'type': 'number'}
POSITIVE = {'type': 'number', 'check_with': _positive}
NON_NEGATIVE = {'type': 'number', 'min': 0}
COUNT = {'type': 'integer', 'min': 1}

JUMP_SCHEMA = {
    'kind': {'type': 'string', 'allowed': ['cp', 'powerlaw'], 'required': True},
    'rate': POSITIVE,
    'law': {'type': 'string', 'check_with': _law},
    'compensated': {'type': 'boolean'},
    'c_pos': NON_NEGATIVE,
    'c_neg': NON_NEGATIVE,
    'alpha': POSITIVE,
    'eps': NON_NEGATIVE,
    'upper': POSITIVE,
}

JUMPS = {'type': 'list', 'schema': {'type': 'dict', 'schema': JUMP_SCHEMA}}

SECTIONS = {
    'mech': {'type': 'dict', 'schema': {
        'family': {'type': 'string', 'allowed': ['feller', 'stable', 'finite_activity', 'neveu', 'general']},
        'a': NUMBER,
        'gamma2': NON_NEGATIVE,
        'q': NON_NEGATIVE,
        'alpha': POSITIVE,
        'c': NUMBER,
        'jumps': JUMPS,
    }},
    'env': {'type': 'dict', 'schema': {
        'alpha': NUMBER,
        'sigma': NON_NEGATIVE,
        'variant': {'type': 'string', 'allowed': ['S', 'K0', 'K']},
        'psi_prime0': NUMBER,
        'gaussian_small_jumps': {'type': 'boolean'},
    }},
    'jumps': JUMPS,
    'imm': {'type': 'dict', 'schema': {'d': NON_NEGATIVE, 'jumps': JUMPS}},
    'beta': {'type': 'dict', 'schema': {
        'k': {'type': 'number', 'check_with': _positive, 'excludes': ['points', 'values']},
        'points': {'type': 'list', 'schema': NUMBER, 'dependencies': 'values'},
        'values': {'type': 'list', 'schema': NUMBER, 'dependencies': 'points'},
    }},
    'mc': {'type': 'dict', 'schema': {'n_env': COUNT, 'n_branch': COUNT, 'n_paths': COUNT}},
    'numerics': {'type': 'dict', 'schema': {
        'jump_cut': POSITIVE,
        'z_max': POSITIVE,
        'small_jumps': {'type': 'string', 'allowed': ['drift-only', 'gaussian-correction']},
        'max_step': POSITIVE,
        'tol': POSITIVE,
        'threshold': POSITIVE,
    }},
    'laplace': {'type': 'dict', 'schema': {'lambda': POSITIVE, 'centered': {'type': 'boolean'}}},
    'neveu': {'type': 'dict', 'schema': {'z': POSITIVE, 'lambda': POSITIVE, 't_trunc': POSITIVE, 'n_mc': COUNT}},
    'stable': {'type': 'dict', 'schema': {'alpha': POSITIVE, 'c': NUMBER}},
    'logistic': {'type': 'dict', 'schema': {
        'a': NUMBER,
        'k': POSITIVE,
        'z0': POSITIVE,
        'moments': COUNT,
        'convergence': {'type': 'boolean'},
    }},
    'passage': {'type': 'dict', 'schema': {
        'z': POSITIVE,
        'b': POSITIVE,
        'lambda': {'type': ['number', 'list'], 'schema': POSITIVE},
        'n_paths': COUNT,
        'horizon': POSITIVE,
    }},
    'clt': {'type': 'dict', 'schema': {'t': POSITIVE, 'n_paths': COUNT}},
}

COMMON = {
    'experiment': {'type': 'string', 'allowed': list(EXPERIMENT_KINDS), 'required': True},
    'seed': {'type': 'integer', 'min': 0},
    'T': POSITIVE,
    'dt': POSITIVE,
    'z0': NON_NEGATIVE,
}

EXPERIMENT_SECTIONS = {
    'sample-env': ('env', 'jumps', 'mech'),
    'simulate': ('mech', 'env', 'jumps', 'imm', 'beta', 'mc', 'numerics'),
    'verify-laplace': ('mech', 'env', 'jumps', 'imm', 'mc', 'numerics', 'laplace'),
    'neveu': ('env', 'jumps', 'mc', 'numerics', 'neveu'),
    'stable': ('env', 'jumps', 'mc', 'numerics', 'stable'),
    'logistic': ('env', 'jumps', 'mc', 'logistic'),
    'passage': ('env', 'jumps', 'logistic', 'passage'),
    'clt': ('mech', 'env', 'jumps', 'imm', 'numerics', 'clt'),
    'classify': ('mech', 'env', 'jumps', 'imm', 'beta', 'mc'),
}

REQUIRED = {
    'simulate': ('T', 'dt'),
    'verify-laplace': ('T', 'dt'),
    'sample-env': ('T', 'dt'),
    'stable': ('T', 'dt'),
    'logistic': ('T', 'dt'),
    'passage': ('T', 'dt'),
    'clt': ('dt',),
}


def schema_for(kind):
    if kind not in EXPERIMENT_KINDS:
        raise ValidationError(f"experiment must be one of {list(EXPERIMENT_KINDS)}, got {kind!r}", key='experiment')
    schema = {key: dict(rule) for key, rule in COMMON.items()}
    for key in REQUIRED.get(kind, ()):
        schema[key]['required'] = True
    for section in EXPERIMENT_SECTIONS[kind]:
        schema[section] = SECTIONS[section]
    return schema


def flatten_errors(errors, prefix=''):
    """Cerberus error trees as ``(dotted key, message)`` pairs in key order."""
    flat = []
    for key in sorted(errors, key=str):
        path = f"{prefix}{key}"
        for item in errors[key]:
            if isinstance(item, dict):
                flat.extend(flatten_errors(item, f"{path}."))
            else:
                flat.append((path, item))
    return flat


def validate_config(params):
    """Validates a nested experiment config; raises ValidationError naming the first bad key."""
    kind = params.get('experiment')
    validator = Validator(schema_for(kind), allow_unknown=False)
    if not validator.validate(params):
        problems = flatten_errors(validator.errors)
        key, message = problems[0]
        if message == 'unknown field':
            message = 'is not a known key for this experiment'
        details = '; '.join(f"{k} {m}" for k, m in problems)
        error = ValidationError(f"{key} {message}", key=key)
        error.details = details
        raise error
    return validator.document


def validate_experiment(func):
    """Decorator for experiment handlers: validates ``run.params`` before the handler runs."""
    def wrapper(run):
        run.params = validate_config(run.params)
        return func(run)
    wrapper.__name__ = func.__name__
    wrapper.__doc__ = func.__doc__
    return wrapper
