"""Gibbs random fields: exponential toy model, Ising lattice and ERGM."""

from .ergm import (ErgmModel, ergm_expected_stats_bruteforce, ergm_gibbs_forward, ergm_log_partition_bruteforce,
                   ergm_suff_stats)
from .exponential import ExponentialModel, exp_posterior_density, exp_posterior_mean, exp_score
from .io import read_graph, read_lattice, write_graph, write_lattice
from .ising import (IsingModel, ising_gibbs_forward, ising_log_partition_and_mean, ising_log_partition_exact,
                    ising_posterior_mean_auto, ising_posterior_mean_grid, ising_posterior_mode,
                    ising_sample_exact, ising_suff_stat)

__all__ = [
    "ErgmModel", "ergm_expected_stats_bruteforce", "ergm_gibbs_forward", "ergm_log_partition_bruteforce",
    "ergm_suff_stats", "ExponentialModel", "exp_posterior_density", "exp_posterior_mean", "exp_score",
    "read_graph", "read_lattice", "write_graph", "write_lattice", "IsingModel", "ising_gibbs_forward",
    "ising_log_partition_and_mean", "ising_log_partition_exact", "ising_posterior_mean_auto",
    "ising_posterior_mean_grid", "ising_posterior_mode", "ising_sample_exact", "ising_suff_stat",
]
