"""
cblre-toolkit - simulation and verification of continuous-state branching processes with
immigration and competition in a Lévy random environment.

This package provides:
- Lévy environments: triplets, path sampling, Esscher tilts and exponential functionals
- Branching and immigration mechanisms with their hypothesis checks
- An Euler integrator for the branching equation driven by a shared environment path
- The backward ODE for conditional Laplace transforms and its closed-form special cases
- The logistic model with competition and its first-passage transform
- Long-term classification and central limit checks
- A command-line runner for reproducible experiments
"""

__version__ = "1.0.0"
__license__ = "MIT"

from .processes import (
    CBLREConfig, EnvironmentPath, LevyTriplet, MCEstimate, make_environment, sample_path, simulate,
    simulate_ensemble, solve_v,
)
from .runner import experiment, run

__all__ = [
    "CBLREConfig",
    "EnvironmentPath",
    "LevyTriplet",
    "MCEstimate",
    "make_environment",
    "sample_path",
    "simulate",
    "simulate_ensemble",
    "solve_v",
    "experiment",
    "run",
]
