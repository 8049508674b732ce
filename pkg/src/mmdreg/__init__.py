"""Particle flows for MMD-regularized f-divergences."""

__version__ = "0.1.0"

from .entropy import CATALOG, Entropy, EntropyError, entropy
from .flow import FlowConfig, FlowError, FlowRecord, FlowTrace, euler_step, kinetic_energy, run_flow
from .kernels import RadialKernel, spectral_norm
from .measures import (DiscreteMeasure, discrete_f_divergence, kme_eval, mmd_squared,
                       wasserstein2_empirical)
from .objective import ConfigError, DualSolution, RegularizedProblem, StaleSolutionError, tight_conjugate
from .solvers import SolverConfig, SolverError, fista_finite, fista_infinite, mirror_descent_tight, solve

__all__ = [
    "CATALOG", "ConfigError", "DiscreteMeasure", "DualSolution", "Entropy", "EntropyError",
    "FlowConfig", "FlowError", "FlowRecord", "FlowTrace", "RadialKernel", "RegularizedProblem",
    "SolverConfig", "SolverError", "StaleSolutionError", "discrete_f_divergence", "entropy",
    "euler_step", "fista_finite", "fista_infinite", "kinetic_energy", "kme_eval",
    "mirror_descent_tight", "mmd_squared", "run_flow", "solve", "spectral_norm",
    "tight_conjugate", "wasserstein2_empirical",
]
