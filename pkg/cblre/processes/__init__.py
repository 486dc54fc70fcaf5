from .jumps import (
    CompoundPoisson, Constant, DensityMeasure, Discrete, Exponential, JumpLaw, JumpMeasure, Normal, Pareto,
    PowerLawDensity, two_point,
)
from .levy import (
    EnvironmentPath, LevyTriplet, cumulative_exp_functional, discounted_integral, esscher_kappa, esscher_tilt,
    exp_functional, laplace_exponents, log_exp_functional, make_environment, sample_path, stieltjes_discounted,
)
from .mechanisms import (
    A_T_U, BranchingMechanism, HypothesisReport, ImmigrationMechanism, check_hypotheses, environment_mean,
    feller, finite_activity, neveu, stable,
)
from .montecarlo import (
    MCAccumulator, MCEstimate, PooledEstimate, SeedStream, parallel_map, pooled_conditional, stream_accumulate,
)
from .sde import (
    REDUCERS, CBLREConfig, FinalValue, LaplaceFunctional, QuadraticCompetition, Survival, TabulatedCompetition,
    Trajectory, simulate, simulate_batch, simulate_ensemble,
)
from .laplace import (
    VSolution, cb_laplace_exponent, conditional_laplace, feller_u, identity_check, neveu_extinction,
    neveu_laplace, neveu_v, phi_lower_bound, solve_v, stable_probs, stable_v,
)
from .logistic import (
    LogisticConfig, exact_solution, first_passage_laplace, running_minimum, stationary_moment, strong_errors,
    time_average,
)
from .asymptotics import (
    RegimeReport, classify, clt_check, clt_normalizers, doney_maller_ratio, extinction_fraction, w_dichotomy,
)
from .logging import configure_diagnostics_log, log_numerical_event

__all__ = [
    'JumpLaw', 'Constant', 'Discrete', 'Normal', 'Exponential', 'Pareto', 'two_point',
    'JumpMeasure', 'CompoundPoisson', 'PowerLawDensity', 'DensityMeasure',
    'LevyTriplet', 'EnvironmentPath', 'make_environment', 'sample_path', 'laplace_exponents',
    'esscher_kappa', 'esscher_tilt', 'exp_functional', 'log_exp_functional', 'cumulative_exp_functional',
    'discounted_integral', 'stieltjes_discounted',
    'BranchingMechanism', 'ImmigrationMechanism', 'HypothesisReport', 'check_hypotheses', 'environment_mean',
    'A_T_U', 'feller', 'finite_activity', 'stable', 'neveu',
    'MCEstimate', 'PooledEstimate', 'MCAccumulator', 'SeedStream', 'stream_accumulate', 'pooled_conditional',
    'parallel_map',
    'CBLREConfig', 'QuadraticCompetition', 'TabulatedCompetition', 'Trajectory', 'simulate', 'simulate_batch',
    'simulate_ensemble', 'FinalValue', 'Survival', 'LaplaceFunctional', 'REDUCERS',
    'VSolution', 'solve_v', 'phi_lower_bound', 'conditional_laplace', 'neveu_v', 'neveu_laplace',
    'neveu_extinction', 'stable_v', 'stable_probs', 'feller_u', 'cb_laplace_exponent', 'identity_check',
    'LogisticConfig', 'exact_solution', 'stationary_moment', 'time_average', 'first_passage_laplace',
    'strong_errors', 'running_minimum',
    'RegimeReport', 'classify', 'clt_normalizers', 'clt_check', 'doney_maller_ratio', 'extinction_fraction',
    'w_dichotomy',
    'configure_diagnostics_log', 'log_numerical_event',
]
