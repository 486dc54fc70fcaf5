from .environment import sample_env, simulate_paths
from .laplace import verify_laplace, verify_neveu, verify_stable
from .logistic import verify_logistic, verify_passage
from .asymptotics import classify_regime, verify_clt

__all__ = [
    'sample_env',
    'simulate_paths',
    'verify_laplace',
    'verify_neveu',
    'verify_stable',
    'verify_logistic',
    'verify_passage',
    'classify_regime',
    'verify_clt'
]
