"""Unbiased score estimates from forward simulations or latent draws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

__all__ = ["ScoreEstimate", "score_type1", "score_type2", "score_type1_batch"]


@dataclass(frozen=True)
class ScoreEstimate:
    u_hat: np.ndarray
    K: int
    theta: np.ndarray | None = None

    def __post_init__(self):
        if self.K < 1:
            raise InvalidArgumentError("K must be at least 1")
        if not np.all(np.isfinite(self.u_hat)):
            raise InvalidArgumentError("score estimate is not finite")


def _stack(rows, d=None):
    arr = np.asarray(rows, dtype=float)
    if arr.size == 0:
        raise InvalidArgumentError("need at least one simulation")
    if arr.ndim == 1:
        arr = arr[:, None] if d == 1 else arr[None, :]
    if arr.ndim != 2 or (d is not None and arr.shape[1] != d):
        raise InvalidArgumentError(f"simulations have shape {arr.shape}, expected (K, {d})")
    return arr


def score_type1(s_obs, s_sims, grad_log_prior, theta=None) -> ScoreEstimate:
    """Score of a Gibbs random field from ``K`` forward simulations.

    ``u_hat = s(y) - mean_k s(Y_k) + grad log p(theta)``, with ``Y_k`` drawn
    from the likelihood at ``theta``.  The mean is a fixed-order reduction
    over the rows of ``s_sims`` so results do not depend on how the
    simulations were scheduled.
    """
    s_obs = np.atleast_1d(np.asarray(s_obs, dtype=float))
    d = s_obs.size
    sims = _stack(s_sims, d)
    grad = np.atleast_1d(np.asarray(grad_log_prior, dtype=float))
    if grad.shape != (d,):
        raise InvalidArgumentError(f"grad_log_prior must have length {d}")
    u = s_obs - sims.mean(axis=0) + grad
    return ScoreEstimate(u, sims.shape[0], None if theta is None else np.atleast_1d(theta))


def score_type2(u_values, theta=None) -> ScoreEstimate:
    """Fisher's-identity score: the average of complete-data scores over ``K`` latent draws."""
    arr = np.asarray(u_values, dtype=float)
    if arr.size == 0:
        raise InvalidArgumentError("need at least one latent draw")
    arr = np.atleast_2d(arr)
    return ScoreEstimate(arr.mean(axis=0), arr.shape[0], None if theta is None else np.atleast_1d(theta))


def score_type1_batch(s_obs, sim_stats, grad_log_prior, K=None) -> np.ndarray:
    """Vectorised :func:`score_type1` over many iterates.

    Parameters
    ----------
    s_obs : array_like, shape (d,)
    sim_stats : array_like, shape (n, K_max, d)
        Simulated statistics for each iterate.
    grad_log_prior : array_like, shape (n, d)
    K : int, optional
        Use only the first ``K`` simulations of each iterate.
    """
    stats = np.asarray(sim_stats, dtype=float)
    if stats.ndim != 3:
        raise InvalidArgumentError("sim_stats must have shape (n, K, d)")
    if K is not None:
        if not 1 <= K <= stats.shape[1]:
            raise InvalidArgumentError(f"K={K} outside 1..{stats.shape[1]}")
        stats = stats[:, :K]
    return np.asarray(s_obs, dtype=float) - stats.mean(axis=1) + np.asarray(grad_log_prior, dtype=float)
