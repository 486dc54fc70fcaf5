"""
Builds model objects from a validated experiment config.
"""
from ..processes.constants import DEFAULT_EXPLOSION_CAP, DEFAULT_JUMP_CUT
from ..processes.jumps import CompoundPoisson, Constant, Exponential, Normal, Pareto, PowerLawDensity, two_point
from ..processes.levy import make_environment
from ..processes.mechanisms import BranchingMechanism, ImmigrationMechanism, feller, neveu, stable
from ..processes.sde import CBLREConfig, QuadraticCompetition, TabulatedCompetition
from ..utils.errors import ValidationError
from ..utils.helpers import parse_law

INF = float('inf')

LAWS = {
    'normal': Normal,
    'exp': Exponential,
    'const': Constant,
    'twopoint': two_point,
    'pareto': Pareto,
}


def build_law(expression, key='law'):
    name, args = parse_law(expression)
    try:
        return LAWS[name](*args)
    except ValidationError as exc:
        raise ValidationError(f"{key}: {exc}", key=key)


def build_jump(item, key):
    compensated = item.get('compensated', True)
    if item['kind'] == 'cp':
        if 'rate' not in item or 'law' not in item:
            raise ValidationError(f"{key} of kind cp needs rate and law", key=key)
        return CompoundPoisson(item['rate'], build_law(item['law'], f"{key}.law"), compensated=compensated)
    if 'alpha' not in item:
        raise ValidationError(f"{key} of kind powerlaw needs alpha", key=key)
    try:
        return PowerLawDensity(
            c_pos=item.get('c_pos', 0.0), c_neg=item.get('c_neg', 0.0), alpha=item['alpha'],
            eps=item.get('eps', 0.0), upper=item.get('upper', 1.0), compensated=compensated)
    except ValidationError as exc:
        raise ValidationError(f"{key}: {exc}", key=key)


def build_jumps(items, prefix):
    return tuple(build_jump(item, f"{prefix}.{i}") for i, item in enumerate(items or []))


def build_mechanism(params):
    section = params.get('mech', {})
    family = section.get('family', 'feller')
    a = section.get('a', 0.0)
    gamma2 = section.get('gamma2', 1.0 if family == 'feller' else 0.0)
    if family == 'feller':
        return feller(a=a, gamma2=gamma2)
    if family == 'stable':
        if 'alpha' not in section or 'c' not in section:
            raise ValidationError("mech.family=stable needs mech.alpha and mech.c", key='mech.alpha')
        return stable(section['alpha'], section['c'])
    if family == 'neveu':
        return neveu()
    jumps = build_jumps(section.get('jumps'), 'mech.jumps')
    if len(jumps) > 1:
        raise ValidationError("a branching mechanism takes a single jump measure", key='mech.jumps')
    mu = jumps[0] if jumps else None
    if family == 'finite_activity' and (mu is None or not isinstance(mu, CompoundPoisson)):
        raise ValidationError("mech.family=finite_activity needs one cp jump measure", key='mech.jumps')
    return BranchingMechanism(a=a, gamma2=gamma2, mu=mu, q=section.get('q', 0.0), family=family)


def build_environment(params, mech=None, variant=None):
    """The environment triplet; variant K uses ψ'(0+) from the config or from ``mech``."""
    section = params.get('env', {})
    variant = variant or section.get('variant', 'K0')
    psi_prime0 = section.get('psi_prime0')
    if variant == 'K' and psi_prime0 is None and mech is not None:
        mech.require_h()
        psi_prime0 = mech.psi_prime0()
    return make_environment(
        alpha=section.get('alpha', 0.0), sigma=section.get('sigma', 0.0), pi=build_jumps(params.get('jumps'), 'jumps'),
        variant=variant, psi_prime0=psi_prime0, gaussian_small_jumps=section.get('gaussian_small_jumps', False))


def build_immigration(params):
    section = params.get('imm')
    if not section:
        return None
    jumps = build_jumps(section.get('jumps'), 'imm.jumps')
    if len(jumps) > 1:
        raise ValidationError("immigration takes a single jump measure", key='imm.jumps')
    return ImmigrationMechanism(d=section.get('d', 0.0), nu=jumps[0] if jumps else None)


def build_competition(params):
    section = params.get('beta')
    if not section:
        return None
    if 'points' in section:
        return TabulatedCompetition(tuple(float(x) for x in section['points']),
                                    tuple(float(y) for y in section['values']))
    if 'k' not in section:
        raise ValidationError("beta needs either k or points and values", key='beta')
    return QuadraticCompetition(section['k'])


def build_sde_config(params, mech=None, horizon=None, settings=None):
    mech = mech or build_mechanism(params)
    numerics = params.get('numerics', {})
    jump_cut = getattr(settings, 'BRANCH_JUMP_CUT', DEFAULT_JUMP_CUT)
    z_max = getattr(settings, 'EXPLOSION_CAP', DEFAULT_EXPLOSION_CAP)
    return CBLREConfig(
        z0=params.get('z0', 1.0), mech=mech, env=build_environment(params, mech),
        horizon=horizon if horizon is not None else params['T'], dt=params['dt'],
        imm=build_immigration(params), beta=build_competition(params),
        jump_cut=numerics.get('jump_cut', jump_cut), z_max=numerics.get('z_max', z_max),
        small_jump_mode=numerics.get('small_jumps', 'drift-only'))
