"""Outer MCMC drivers: random-walk Metropolis, the exchange algorithm and a
data-augmentation chain for latent-path models.

All randomness for the outer chain comes from one reserved Philox stream;
score simulations for iterate ``i`` come from the streams ``(i, c)``, one per
simulation job ``c``.  The split of ``K`` simulations into jobs is fixed by
``SimConfig.n_chains`` and never by the worker count, so traces are
identical however many threads run them.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgumentError, SimulationError
from .parallel_sim import OUTER_STREAM, PSEUDO_STREAM, SimJob, SimPool, stream
from .score_est import score_type1_batch

__all__ = [
    "ChainConfig",
    "SimConfig",
    "ChainOutput",
    "rwm_chain",
    "exchange_log_ratio",
    "exchange_chain",
    "latent_chain",
    "write_trace",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChainConfig:
    """Outer-chain settings.

    ``iterations`` counts recorded iterates; ``burn_in`` extra iterates are
    run first and discarded, and ``thinning`` steps are taken per record.
    ``proposal_cov``, when given, replaces the diagonal ``proposal_sd**2``
    random-walk covariance.
    """

    iterations: int
    proposal_sd: np.ndarray
    initial_theta: np.ndarray
    seed: int = 0
    thinning: int = 1
    burn_in: int = 0
    proposal_cov: np.ndarray | None = None

    def __post_init__(self):
        sd = np.atleast_1d(np.asarray(self.proposal_sd, dtype=float))
        th = np.atleast_1d(np.asarray(self.initial_theta, dtype=float))
        if sd.size == 1 and th.size > 1:
            sd = np.full(th.size, sd[0])
        if int(self.iterations) < 1:
            raise InvalidArgumentError("iterations must be >= 1")
        if sd.shape != th.shape or np.any(sd <= 0) or not np.all(np.isfinite(sd)):
            raise InvalidArgumentError("proposal_sd must be positive with one entry per parameter")
        if int(self.thinning) < 1 or int(self.burn_in) < 0:
            raise InvalidArgumentError("thinning must be >= 1 and burn_in >= 0")
        if int(self.seed) < 0:
            raise InvalidArgumentError("seed must be non-negative")
        object.__setattr__(self, "proposal_sd", sd)
        object.__setattr__(self, "initial_theta", th)
        if self.proposal_cov is None:
            chol = np.diag(sd)
        else:
            cov = np.atleast_2d(np.asarray(self.proposal_cov, dtype=float))
            if cov.shape != (th.size, th.size) or not np.allclose(cov, cov.T):
                raise InvalidArgumentError("proposal_cov must be a symmetric d x d matrix")
            try:
                chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError as exc:
                raise InvalidArgumentError("proposal_cov must be positive definite") from exc
            object.__setattr__(self, "proposal_cov", cov)
        object.__setattr__(self, "_chol", chol)

    def step(self, rng) -> np.ndarray:
        """One random-walk increment."""
        return self._chol @ rng.standard_normal(self.dim)

    @property
    def dim(self) -> int:
        return self.initial_theta.size


@dataclass(frozen=True)
class SimConfig:
    """Score-simulation settings for one outer chain.

    Parameters
    ----------
    K : int
        Simulations (or latent draws) per recorded iterate.
    n_chains : int
        Independent simulation jobs the ``K`` draws are split across.
    workers : int
        Threads used to run the jobs; has no effect on results.
    reuse_exchange_draw : bool
        Count an accepted exchange pseudo-draw as one of the ``K``.
    """

    K: int = 1
    n_chains: int = 1
    workers: int = 1
    reuse_exchange_draw: bool = False

    def __post_init__(self):
        if self.K < 1 or self.n_chains < 1 or self.workers < 1:
            raise InvalidArgumentError("K, n_chains and workers must be positive")

    def split(self, K=None) -> list[int]:
        K = self.K if K is None else K
        c = min(self.n_chains, K)
        base, extra = divmod(K, c)
        return [base + (j < extra) for j in range(c)]


def _freeze(a):
    if isinstance(a, np.ndarray):
        a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ChainOutput:
    """Recorded chain.

    ``accepted[i]`` counts accepted moves among the ``thinning`` steps that
    led to record ``i``; ``acceptance_rate`` is their total over all steps.
    ``aux_stats`` holds per-iterate simulation output of shape (I, K, d).
    """

    thetas: np.ndarray
    u_hats: np.ndarray | None
    aux_stats: np.ndarray | None
    accepted: np.ndarray
    acceptance_rate: float
    failed: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.thetas.shape[0]
        for name in ("u_hats", "aux_stats", "accepted"):
            arr = getattr(self, name)
            if arr is not None and arr.shape[0] != n:
                raise InvalidArgumentError(f"{name} has {arr.shape[0]} rows, expected {n}")
        if self.failed is None:
            object.__setattr__(self, "failed", np.zeros(n, dtype=bool))
        for name in ("thetas", "u_hats", "aux_stats", "accepted", "failed"):
            _freeze(getattr(self, name))

    @property
    def iterations(self) -> int:
        return self.thetas.shape[0]

    def scores(self, K: int) -> np.ndarray:
        """Score estimates using only the first ``K`` simulations of each iterate (Type I)."""
        model_s_obs = self.metadata.get("s_obs")
        grad = self.metadata.get("grad_log_prior")
        if model_s_obs is None or self.aux_stats is None:
            raise InvalidArgumentError("chain has no forward-simulation statistics")
        return score_type1_batch(model_s_obs, self.aux_stats, grad, K)


def _outer_rng(seed):
    return stream(seed, OUTER_STREAM, 0)


def _steps(config):
    return config.burn_in + config.iterations * config.thinning


def rwm_chain(log_target: Callable, config: ChainConfig) -> ChainOutput:
    """Gaussian random-walk Metropolis on ``log_target``."""
    theta = config.initial_theta.copy()
    lp = float(log_target(theta))
    if not np.isfinite(lp):
        raise InvalidArgumentError("log target is not finite at the initial point")
    rng = _outer_rng(config.seed)
    d = config.dim
    thetas = np.empty((config.iterations, d))
    accepted = np.zeros(config.iterations, dtype=np.int64)
    for step in range(_steps(config)):
        prop = theta + config.step(rng)
        lp_prop = float(log_target(prop))
        ok = np.log(rng.random()) < lp_prop - lp
        if ok:
            theta, lp = prop, lp_prop
        rec = step - config.burn_in
        if rec >= 0:
            accepted[rec // config.thinning] += ok
            if (rec + 1) % config.thinning == 0:
                thetas[rec // config.thinning] = theta
    rate = accepted.sum() / (config.iterations * config.thinning)
    return ChainOutput(thetas, None, None, accepted, float(rate),
                       metadata={"kind": "rwm", "seed": config.seed})


def exchange_log_ratio(theta, theta_prop, s_obs, s_prop, log_prior, log_h_ratio=0.0) -> float:
    """Log acceptance ratio of one exchange move.

    The partition functions cancel, leaving
    ``(theta' - theta) . (s(y) - s(y')) + log p(theta')/p(theta) + log h-ratio``.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    theta_prop = np.atleast_1d(np.asarray(theta_prop, dtype=float))
    lp_new = log_prior(theta_prop)
    if not np.isfinite(lp_new):
        return -np.inf
    diff = np.asarray(s_obs, dtype=float) - np.asarray(s_prop, dtype=float)
    return float((theta_prop - theta) @ diff + lp_new - log_prior(theta) + log_h_ratio)


def _sim_stats_job(rng, model, theta, n):
    return model.simulate_stats(theta, n, rng)


def _score_sims(model, theta, i, K, config, sim_config, pool):
    sizes = sim_config.split(K)
    jobs = [SimJob(i, c, config.seed, _sim_stats_job, (model, theta, n)) for c, n in enumerate(sizes)]
    return np.concatenate(pool.run(jobs), axis=0)


def exchange_chain(model, config: ChainConfig, sim_config: SimConfig = SimConfig(), prior=None,
                   proposal: Callable | None = None, pool: SimPool | None = None) -> ChainOutput:
    """Exchange algorithm for a Gibbs random field, with per-iterate score simulations.

    Parameters
    ----------
    model
        Provides ``s_obs``, ``simulate_stats(theta, n, rng)``, ``log_prior`` and
        ``grad_log_prior``.
    prior : (log_prior, grad_log_prior), optional
        Overrides the model's prior.
    proposal : callable, optional
        ``proposal(theta, rng) -> (theta', log h(theta|theta') - log h(theta'|theta))``.
        Defaults to a Gaussian random walk with ``config.proposal_sd``.

    Notes
    -----
    Each recorded iterate draws ``K`` fresh simulations at its current
    ``theta`` (also after a rejection).  A failed pseudo-draw rejects the
    move and sets ``failed[i]``.
    """
    log_prior, grad_log_prior = prior if prior is not None else (model.log_prior, model.grad_log_prior)
    s_obs = np.atleast_1d(np.asarray(model.s_obs, dtype=float))
    d = s_obs.size
    theta = config.initial_theta.copy()
    if theta.size != d:
        raise InvalidArgumentError(f"initial_theta must have length {d}")
    if not np.isfinite(log_prior(theta)):
        raise InvalidArgumentError("prior density is zero at the initial point")
    rng = _outer_rng(config.seed)
    K = sim_config.K
    I = config.iterations
    thetas = np.empty((I, d))
    stats = np.empty((I, K, d))
    grads = np.empty((I, d))
    accepted = np.zeros(I, dtype=np.int64)
    failed = np.zeros(I, dtype=bool)
    own_pool = pool is None
    pool = SimPool(sim_config.workers) if own_pool else pool
    try:
        for step in range(_steps(config)):
            if proposal is None:
                prop = theta + config.step(rng)
                log_h = 0.0
            else:
                prop, log_h = proposal(theta, rng)
                prop = np.atleast_1d(np.asarray(prop, dtype=float))
            u = rng.random()
            s_prop = None
            ok = False
            fail = False
            if np.isfinite(log_prior(prop)):
                try:
                    s_prop = model.simulate_stats(prop, 1, stream(config.seed, PSEUDO_STREAM, step))[0]
                except Exception as exc:  # noqa: BLE001 - recorded, state repeated
                    log.warning("pseudo-draw failed at step %d: %r", step, exc)
                    fail = True
                if s_prop is not None:
                    ok = np.log(u) < exchange_log_ratio(theta, prop, s_obs, s_prop, log_prior, log_h)
            if ok:
                theta = prop
            rec = step - config.burn_in
            if rec < 0:
                continue
            r = rec // config.thinning
            accepted[r] += ok
            failed[r] |= fail
            if (rec + 1) % config.thinning:
                continue
            thetas[r] = theta
            grads[r] = grad_log_prior(theta)
            if sim_config.reuse_exchange_draw and ok:
                stats[r, 0] = s_prop
                if K > 1:
                    stats[r, 1:] = _score_sims(model, theta, r, K - 1, config, sim_config, pool)
            else:
                stats[r] = _score_sims(model, theta, r, K, config, sim_config, pool)
    finally:
        if own_pool:
            pool.close()
    u_hats = score_type1_batch(s_obs, stats, grads)
    meta = {
        "kind": "exchange",
        "model": getattr(model, "name", type(model).__name__),
        "K": K,
        "seed": config.seed,
        "n_chains": sim_config.n_chains,
        "s_obs": s_obs,
        "grad_log_prior": grads,
    }
    rate = accepted.sum() / (I * config.thinning)
    return ChainOutput(thetas, u_hats, stats, accepted, float(rate), failed, meta)


def _latent_score_job(rng, model, theta, n):
    return model.score_draws(theta, n, rng)


def latent_chain(model, config: ChainConfig, sim_config: SimConfig = SimConfig(),
                 pool: SimPool | None = None, outer_sweeps: int = 1, init_sweeps: int = 50) -> ChainOutput:
    """Metropolis-within-Gibbs chain on ``(theta, x)`` for a latent-path model.

    Each step updates ``theta`` by random-walk Metropolis given the current
    latent path and then refreshes the path with ``outer_sweeps`` bridge
    sweeps.  At every recorded iterate ``K`` fresh latent draws, each from
    its own inner chain, give the Fisher's-identity score estimate.

    ``model`` provides ``complete_loglik``, ``init_latent``, ``sweep``,
    ``score_draws``, ``log_prior`` and ``grad_log_prior`` (see
    :class:`rvcv.sde.SirModel`).
    """
    rng = _outer_rng(config.seed)
    theta = config.initial_theta.copy()
    d = theta.size
    lp_prior = model.log_prior(theta)
    if not np.isfinite(lp_prior):
        raise InvalidArgumentError("prior density is zero at the initial point")
    latent = model.init_latent(theta, 1, rng)
    model.sweep(theta, latent, init_sweeps, rng)
    cur = float(model.complete_loglik(theta, latent)[0]) + lp_prior
    if not np.isfinite(cur):
        raise InvalidArgumentError("complete-data likelihood is zero at the initial point")
    K = sim_config.K
    I = config.iterations
    thetas = np.empty((I, d))
    draws = np.empty((I, K, d))
    accepted = np.zeros(I, dtype=np.int64)
    own_pool = pool is None
    pool = SimPool(sim_config.workers) if own_pool else pool
    try:
        for step in range(_steps(config)):
            prop = theta + config.step(rng)
            u = rng.random()
            lp = model.log_prior(prop)
            ok = False
            if np.isfinite(lp):
                new = float(model.complete_loglik(prop, latent)[0]) + lp
                ok = np.log(u) < new - cur
            if ok:
                theta = prop
            model.sweep(theta, latent, outer_sweeps, rng)
            cur = float(model.complete_loglik(theta, latent)[0]) + model.log_prior(theta)
            rec = step - config.burn_in
            if rec < 0:
                continue
            r = rec // config.thinning
            accepted[r] += ok
            if (rec + 1) % config.thinning:
                continue
            thetas[r] = theta
            jobs = [SimJob(r, c, config.seed, _latent_score_job, (model, theta.copy(), n))
                    for c, n in enumerate(sim_config.split())]
            draws[r] = np.concatenate(pool.run(jobs), axis=0)
    finally:
        if own_pool:
            pool.close()
    if not np.all(np.isfinite(draws)):
        raise SimulationError("non-finite complete-data score")
    meta = {"kind": "latent", "model": getattr(model, "name", type(model).__name__), "K": K,
            "seed": config.seed, "n_chains": sim_config.n_chains}
    rate = accepted.sum() / (I * config.thinning)
    return ChainOutput(thetas, draws.mean(axis=1), draws, accepted, float(rate), None, meta)


def write_trace(path, output: ChainOutput) -> None:
    """One CSV row per recorded iterate: iteration, theta, u_hat, accept count."""
    d = output.thetas.shape[1]
    header = ["iteration"] + [f"theta_{j}" for j in range(d)]
    if output.u_hats is not None:
        header += [f"u_hat_{j}" for j in range(d)]
    header.append("accepted")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(output.iterations):
            row = [i] + [repr(float(v)) for v in output.thetas[i]]
            if output.u_hats is not None:
                row += [repr(float(v)) for v in output.u_hats[i]]
            row.append(int(output.accepted[i]))
            w.writerow(row)
