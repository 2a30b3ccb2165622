"""End-to-end experiment runners.

Every replicate is one outer chain with ``max(I)`` recorded iterates and
``max(K)`` simulations per iterate.  Smaller ``I`` use chain prefixes and
smaller ``K`` the first ``K`` simulations, so one run fills the whole grid.
"""

from __future__ import annotations

import logging
import math
import time
from importlib import resources
from pathlib import Path

import numpy as np

from ..cv_core import (PolynomialSpec, argmin_r, controlled_values, cost_normalized_ratio,
                       estimate_optimal_coeffs, fit_rho_curve, monomial_map, rv_estimate,
                       variance_reduction_factor)
from ..errors import DegenerateDesignError, RvcvError
from ..grf.ergm import ErgmModel
from ..grf.exponential import ExponentialModel, exp_posterior_mean
from ..grf.io import read_graph, read_lattice
from ..grf.ising import IsingModel, ising_posterior_mean_auto, ising_sample_exact
from ..parallel_sim import SimPool, default_workers
from ..samplers import ChainConfig, SimConfig, exchange_chain, latent_chain, write_trace
from ..sde import SirModel, SirParams, observe, read_observations, simulate_sir
from .config import ExperimentConfig
from .report import ExperimentReport

__all__ = ["run_experiment", "replicate_seed", "build_model", "generate_ising_data", "generate_sir_data",
           "bundled_graph", "report_rows"]

log = logging.getLogger(__name__)


def replicate_seed(master_seed: int, replicate: int) -> int:
    """Master seed of replicate ``r``; a pure function of ``(master_seed, r)``."""
    return int(np.random.SeedSequence([int(master_seed), int(replicate)]).generate_state(1, np.uint64)[0])


def bundled_graph() -> np.ndarray:
    path = resources.files("rvcv") / "data" / "ergm_n16.txt"
    with resources.as_file(path) as p:
        return read_graph(p, fmt="edgelist", n=16)


def generate_ising_data(rows, cols, theta, seed, double_count=False) -> np.ndarray:
    """Exact draw from the Ising likelihood (no burn-in bias)."""
    return ising_sample_exact(theta, rows, cols, K=1, seed=seed, double_count=double_count)[0]


def generate_sir_data(settings) -> tuple[np.ndarray, np.ndarray]:
    params = SirParams(tuple(settings["theta_true"]), settings["N"])
    path = simulate_sir(params, settings["X0"], settings["t_end"], settings["sim_dt"], seed=settings["data_seed"])
    return observe(path, settings["n_obs"])


def build_model(config: ExperimentConfig):
    """Model object, default initial theta and any oracle values."""
    ms = config.model_settings
    exp = config.experiment
    info = {}
    if exp in ("exponential", "rho-curve", "k-allocation"):
        model = ExponentialModel(ms["y"])
        info["oracle_mean"] = [exp_posterior_mean(ms["y"])]
        return model, np.array([1.0]), info
    if exp == "ising":
        if ms["data"]:
            data, _ = read_lattice(ms["data"])
        else:
            data = generate_ising_data(ms["rows"], ms["cols"], ms["theta_true"], ms["data_seed"], ms["double_count"])
        sites = data.size
        model = IsingModel(data, prior_sd=ms["prior_sd"], burn_in=ms["burn_in_sweeps"] * sites,
                           lag=ms["lag_sweeps"] * sites, sampler=ms["sampler"], init=ms["init"],
                           double_count=ms["double_count"])
        if ms["oracle_points"]:
            mean, grid = ising_posterior_mean_auto(data, ms["prior_sd"], ms["oracle_points"],
                                                   double_count=ms["double_count"])
            info["oracle_mean"] = [mean]
            info["oracle_grid"] = [float(grid[0]), float(grid[-1]), int(grid.size)]
        info["s_obs"] = model.s_obs
        return model, np.array([0.0]), info
    if exp == "ergm":
        data = bundled_graph() if ms["data"] in (None, "bundled") else read_graph(ms["data"], n=ms["n"])
        model = ErgmModel(data, prior_sd=ms["prior_sd"], burn_in=ms["burn_in"], lag=ms["lag"], init=ms["init"])
        info["s_obs"] = model.s_obs
        return model, np.array([-1.0, 0.0]), info
    if exp == "sir":
        if ms["data"]:
            times, states = read_observations(ms["data"])
        else:
            times, states = generate_sir_data(ms)
        model = SirModel(times, states, N=ms["N"], n_latent_per_gap=ms["n_latent_per_gap"],
                         prior_shape=ms["prior_shape"], prior_scale=ms["prior_scale"],
                         inner_steps=ms["inner_steps"])
        return model, np.asarray(ms["theta_true"], dtype=float), info
    raise AssertionError(exp)  # pragma: no cover - config validation guards this


def _run_chain(config, model, theta0, seed, pool):
    ms = config.model_settings
    chain_cfg = ChainConfig(iterations=max(config.I), proposal_sd=config.proposal_sd,
                            initial_theta=theta0 if config.initial_theta is None else config.initial_theta,
                            seed=seed, burn_in=config.burn_in,
                            proposal_cov=None if config.proposal_cov is None else np.array(config.proposal_cov))
    sim_cfg = SimConfig(K=max(config.K), n_chains=config.n_chains, workers=pool.workers,
                        reuse_exchange_draw=config.reuse_exchange_draw)
    if config.experiment == "sir":
        return latent_chain(model, chain_cfg, sim_cfg, pool=pool, outer_sweeps=ms["outer_sweeps"])
    return exchange_chain(model, chain_cfg, sim_cfg, pool=pool)


def _scores(chain, K):
    if chain.metadata["kind"] == "latent":
        return chain.aux_stats[:, :K].mean(axis=1)
    return chain.scores(K)


def _cell(g_list, m_list, batches):
    """Per-replicate estimates and pooled diagnostics for one grid cell and target."""
    recs = []
    for g, m in zip(g_list, m_list):
        est = rv_estimate(g, m, n_batches=batches)
        n = g.size
        recs.append((est.mu_plain, est.mu_controlled, est.se_plain, est.se_controlled,
                     g.std(ddof=1) / math.sqrt(n), est.controlled.std(ddof=1) / math.sqrt(n)))
    g_all = np.concatenate(g_list)
    m_all = np.concatenate(m_list)
    phi = estimate_optimal_coeffs(g_all, m_all)
    diag = variance_reduction_factor(g_all, controlled_values(g_all, m_all, phi))
    return np.array(recs), diag


_STAT_FIELDS = ("mu_plain", "mu_controlled", "se_plain", "se_controlled", "std_plain", "std_controlled",
                "std_controlled_se", "std_between_plain", "std_between_controlled", "R", "rho", "sqrt_IK_std")


def report_rows(config: ExperimentConfig, chains, runtime=0.0) -> list[dict]:
    """Grid of summary rows from finished chains (see :class:`ExperimentReport`).

    ``std_*`` is the per-chain standard error ``sd / sqrt(I)`` averaged over
    replicates (``std_controlled_se`` is its standard error); ``se_*`` is
    the uncertainty of the reported means (between-replicate, or batch means
    for a single chain); ``R`` and ``rho`` come from one coefficient fit on
    the pooled replicates.
    """
    rows = []
    d = chains[0].thetas.shape[1]
    n_rep = len(chains)
    for K in config.K:
        scores = [_scores(c, K) for c in chains]
        for deg in config.degrees:
            spec = PolynomialSpec(d, deg)
            for I in config.I:
                ms = [monomial_map(c.thetas[:I], u[:I], spec) for c, u in zip(chains, scores)]
                for j in range(d):
                    gs = [np.ascontiguousarray(c.thetas[:I, j]) for c in chains]
                    row = {"experiment": config.experiment, "I": I, "K": K, "degree": deg, "target": j,
                           "runtime_s": runtime, "flag": ""}
                    try:
                        recs, diag = _cell(gs, ms, config.batches)
                    except DegenerateDesignError as exc:
                        row.update({k: math.nan for k in _STAT_FIELDS})
                        row["flag"] = f"degenerate design: {exc}"
                        rows.append(row)
                        continue
                    mu_p, mu_c, bm_p, bm_c, sd_p, sd_c = recs.T
                    if n_rep > 1:
                        between_p = float(mu_p.std(ddof=1))
                        between_c = float(mu_c.std(ddof=1))
                        se_plain = between_p / math.sqrt(n_rep)
                        se_ctrl = between_c / math.sqrt(n_rep)
                        std_se = float(sd_c.std(ddof=1) / math.sqrt(n_rep))
                    else:
                        between_p = between_c = std_se = math.nan
                        se_plain, se_ctrl = float(bm_p[0]), float(bm_c[0])
                    std_c = float(sd_c.mean())
                    row.update(
                        mu_plain=float(mu_p.mean()),
                        mu_controlled=float(mu_c.mean()),
                        se_plain=se_plain,
                        se_controlled=se_ctrl,
                        std_plain=float(sd_p.mean()),
                        std_controlled=std_c,
                        std_controlled_se=std_se,
                        std_between_plain=between_p,
                        std_between_controlled=between_c,
                        R=diag.R,
                        rho=diag.rho,
                        sqrt_IK_std=math.sqrt(I * K) * std_c,
                    )
                    rows.append(row)
    order = {"I": config.I, "K": config.K, "degree": config.degrees}
    rows.sort(key=lambda r: (order["I"].index(r["I"]), order["K"].index(r["K"]),
                             order["degree"].index(r["degree"]), r["target"]))
    return rows


def run_experiment(config: ExperimentConfig, workers: int | None = None, out_dir=None,
                   keep_chains: bool = False) -> ExperimentReport:
    """Run the configured study and return (and optionally write) its report.

    ``workers`` only changes wall-clock time; results are identical for any
    value.
    """
    workers = workers or config.workers or default_workers()
    t_setup = time.perf_counter()
    try:
        model, theta0, info = build_model(config)
    except RvcvError as exc:
        exc.args = (f"[{config.experiment}] model setup: {exc}",) + exc.args[1:]
        raise
    timings = {"setup_s": time.perf_counter() - t_setup}
    chains = []
    t0 = time.perf_counter()
    with SimPool(workers) as pool:
        for r in range(config.replicates):
            seed = replicate_seed(config.seed, r)
            try:
                chains.append(_run_chain(config, model, theta0, seed, pool))
            except RvcvError as exc:
                exc.args = (f"[{config.experiment}] replicate {r}: {exc}",) + exc.args[1:]
                raise
            log.info("%s replicate %d/%d done", config.experiment, r + 1, config.replicates)
    runtime = time.perf_counter() - t0
    timings["chains_s"] = runtime
    timings["workers"] = workers
    rows = report_rows(config, chains, runtime)
    extra = {k: v for k, v in info.items()}
    extra["acceptance_rate"] = [c.acceptance_rate for c in chains]
    extra["failed_iterates"] = int(sum(int(c.failed.sum()) for c in chains))
    rho_fit = None
    if config.experiment in ("rho-curve", "k-allocation"):
        rho_fit, fit_extra = _rho_analysis(config, rows)
        extra.update(fit_extra)
    report = ExperimentReport(config.experiment, rows, config.to_dict(), rho_fit, extra, timings)
    if keep_chains:
        report.chains = chains
    out_dir = out_dir or config.out
    if out_dir:
        report.paths = report.write(out_dir)
        write_trace(Path(out_dir) / f"{config.experiment}_trace.csv", chains[0])
    return report


def _rho_analysis(config, rows):
    I = max(config.I)
    deg = config.degrees[-1]
    sel = [r for r in rows if r["I"] == I and r["degree"] == deg and r["target"] == 0]
    K = np.array([r["K"] for r in sel], dtype=float)
    rho = np.abs([r["rho"] for r in sel])
    fit = fit_rho_curve(K, rho)
    fit_d = {"rho_inf": fit.rho_inf, "C": fit.C, "residual": fit.residual, "degree": deg, "I": I,
             "K": K.tolist(), "rho": rho.tolist(), "rho_1_fitted": float(fit.predict(1.0)),
             "ratio_rho1_rhoinf": float(fit.predict(1.0) / fit.rho_inf)}
    extra = {}
    if config.experiment == "k-allocation":
        alloc = []
        for K0 in config.K0:
            best = argmin_r(4 * K0, K0, config.budget, fit.rho_inf, fit.C)
            alloc.append({"K0": K0, "argmin_K": best,
                          "r": [cost_normalized_ratio(k, K0, config.budget, fit.rho_inf, fit.C)
                                for k in range(1, 4 * K0 + 1)]})
        extra["allocation"] = alloc
    return fit_d, extra
