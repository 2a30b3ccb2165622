"""Reduced-variance control variates for models with intractable likelihoods.

Score estimates from forward simulation (or latent imputation) replace the
exact score in zero-variance control variates, giving post-hoc variance
reduction for MCMC output.
"""

from .cv_core import (CvDiagnostics, PolynomialSpec, RhoCurveFit, RvEstimate, argmin_r, controlled_values,
                      cost_normalized_ratio, estimate_optimal_coeffs, fit_rho_curve, monomial_map, rho_curve,
                      rv_estimate, variance_reduction_factor)
from .errors import (ConfigError, DegenerateDesignError, GridResolutionWarning, InvalidArgumentError,
                     MixingWarning, NumericalDegeneracyError, ResourceError, RvcvError, SimulationError)
from .parallel_sim import SimJob, SimPool, run_parallel, stream
from .samplers import ChainConfig, ChainOutput, SimConfig, exchange_chain, latent_chain, rwm_chain
from .score_est import ScoreEstimate, score_type1, score_type2

__version__ = "0.1.0"

__all__ = [
    "CvDiagnostics", "PolynomialSpec", "RhoCurveFit", "RvEstimate", "argmin_r", "controlled_values",
    "cost_normalized_ratio", "estimate_optimal_coeffs", "fit_rho_curve", "monomial_map", "rho_curve",
    "rv_estimate", "variance_reduction_factor", "ConfigError", "DegenerateDesignError", "GridResolutionWarning",
    "InvalidArgumentError", "MixingWarning", "NumericalDegeneracyError", "ResourceError", "RvcvError",
    "SimulationError", "SimJob", "SimPool", "run_parallel", "stream", "ChainConfig", "ChainOutput", "SimConfig",
    "exchange_chain", "latent_chain", "rwm_chain", "ScoreEstimate", "score_type1", "score_type2",
]
