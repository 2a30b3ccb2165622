"""Undirected exponential random graph model with edge and two-star statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numba
import numpy as np
from scipy.special import logsumexp

from ..errors import InvalidArgumentError, ResourceError

__all__ = [
    "ErgmModel",
    "check_graph",
    "ergm_suff_stats",
    "ergm_gibbs_forward",
    "ergm_log_partition_bruteforce",
    "ergm_expected_stats_bruteforce",
    "MAX_BRUTEFORCE_NODES",
]

MAX_BRUTEFORCE_NODES = 5


def check_graph(adjacency) -> np.ndarray:
    a = np.asarray(adjacency)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError("adjacency must be a square matrix")
    if not np.all((a == 0) | (a == 1)):
        raise InvalidArgumentError("adjacency entries must be 0 or 1")
    if np.any(np.diag(a)):
        raise InvalidArgumentError("self-loops are not allowed")
    if not np.array_equal(a, a.T):
        raise InvalidArgumentError("adjacency must be symmetric")
    return a.astype(np.int8)


def ergm_suff_stats(graph) -> tuple[int, int]:
    """Edge count and two-star count (``sum_v C(deg v, 2)``)."""
    a = check_graph(graph)
    deg = a.sum(axis=1, dtype=np.int64)
    return int(deg.sum() // 2), int(np.sum(deg * (deg - 1) // 2))


@numba.njit(nogil=True, cache=True)
def _ergm_chain(adj, theta1, theta2, burn_in, lag, n_draws, uniforms, out_stats, out_graphs, keep):
    n = adj.shape[0]
    deg = np.zeros(n, dtype=np.int64)
    for i in range(n):
        for j in range(n):
            deg[i] += adj[i, j]
    s1 = 0
    s2 = 0
    for i in range(n):
        s1 += deg[i]
        s2 += deg[i] * (deg[i] - 1) // 2
    s1 //= 2
    i = 0
    j = 1
    total = burn_in + n_draws * lag
    draw = 0
    for step in range(1, total + 1):
        cur = adj[i, j]
        # two-stars created by adding edge (i, j), excluding the edge itself
        d2 = deg[i] + deg[j] - 2 * cur
        eta = theta1 + theta2 * d2
        if eta >= 0:
            p_on = 1.0 / (1.0 + math.exp(-eta))
        else:
            e = math.exp(eta)
            p_on = e / (1.0 + e)
        new = 1 if uniforms[step - 1] < p_on else 0
        if new != cur:
            sign = new - cur
            s1 += sign
            s2 += sign * d2
            deg[i] += sign
            deg[j] += sign
            adj[i, j] = new
            adj[j, i] = new
        j += 1
        if j == n:
            i += 1
            if i == n - 1:
                i = 0
            j = i + 1
        if step > burn_in and (step - burn_in) % lag == 0:
            out_stats[draw, 0] = s1
            out_stats[draw, 1] = s2
            if keep:
                out_graphs[draw] = adj
            draw += 1


def _gibbs(theta, adj, burn_in, lag, K, rng, keep):
    if K < 1:
        raise InvalidArgumentError("K must be at least 1")
    if burn_in < 0 or lag < 1:
        raise InvalidArgumentError("burn_in must be >= 0 and lag >= 1")
    if adj.shape[0] < 2:
        raise InvalidArgumentError("need at least two nodes")
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.shape != (2,):
        raise InvalidArgumentError("theta must be a pair (edges, two-stars)")
    uniforms = rng.random(burn_in + K * lag)
    stats = np.empty((K, 2), dtype=np.int64)
    graphs = np.empty((K if keep else 1,) + adj.shape, dtype=np.int8)
    _ergm_chain(adj, theta[0], theta[1], burn_in, lag, K, uniforms, stats, graphs, keep)
    return stats.astype(float), (graphs if keep else None)


def ergm_gibbs_forward(theta, n, burn_in=1000, lag=1000, K=1, seed=None, init=None, rng=None) -> np.ndarray:
    """Draw ``K`` graphs from a systematic-scan single-dyad Gibbs chain.

    ``burn_in`` and ``lag`` count dyad updates.  The chain starts from
    ``init`` (default: the empty graph).

    Returns
    -------
    ndarray of int8, shape (K, n, n)
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    if init is None:
        adj = np.zeros((n, n), dtype=np.int8)
    else:
        adj = check_graph(init).copy()
        if adj.shape != (n, n):
            raise InvalidArgumentError("init graph has the wrong size")
    _, graphs = _gibbs(theta, adj, int(burn_in), int(lag), int(K), rng, True)
    return graphs


def _all_graph_stats(n):
    if n > MAX_BRUTEFORCE_NODES:
        raise ResourceError(f"brute-force enumeration limited to n <= {MAX_BRUTEFORCE_NODES}")
    if n < 1:
        raise InvalidArgumentError("n must be positive")
    pairs = list(combinations(range(n), 2))
    m = len(pairs)
    codes = np.arange(1 << m)
    bits = (codes[:, None] >> np.arange(m)) & 1
    deg = np.zeros((codes.size, n), dtype=np.int64)
    for e, (i, j) in enumerate(pairs):
        deg[:, i] += bits[:, e]
        deg[:, j] += bits[:, e]
    s1 = bits.sum(axis=1)
    s2 = (deg * (deg - 1) // 2).sum(axis=1)
    return np.column_stack([s1, s2]).astype(float)


def ergm_log_partition_bruteforce(theta, n) -> float:
    """``log sum_y exp(theta . s(y))`` over all ``2**C(n,2)`` graphs."""
    stats = _all_graph_stats(int(n))
    return float(logsumexp(stats @ np.asarray(theta, dtype=float)))


def ergm_expected_stats_bruteforce(theta, n) -> np.ndarray:
    stats = _all_graph_stats(int(n))
    logw = stats @ np.asarray(theta, dtype=float)
    w = np.exp(logw - logsumexp(logw))
    return w @ stats


@dataclass(frozen=True)
class ErgmModel:
    """ERGM likelihood for an observed graph with independent ``N(0, prior_sd^2)`` priors."""

    data: np.ndarray
    prior_sd: float = 5.0
    burn_in: int = 1000
    lag: int = 1000
    init: str = "data"
    name: str = "ergm"

    def __post_init__(self):
        object.__setattr__(self, "data", check_graph(self.data))
        if self.init not in ("data", "empty"):
            raise InvalidArgumentError(f"unknown init {self.init!r}")

    dim = 2

    @property
    def s_obs(self) -> np.ndarray:
        return np.array(ergm_suff_stats(self.data), dtype=float)

    def suff_stat(self, graph) -> np.ndarray:
        return np.array(ergm_suff_stats(graph), dtype=float)

    def log_prior(self, theta) -> float:
        t = np.asarray(theta, dtype=float)
        return float(-0.5 * np.sum((t / self.prior_sd) ** 2))

    def grad_log_prior(self, theta) -> np.ndarray:
        return -np.asarray(theta, dtype=float) / self.prior_sd**2

    def simulate_stats(self, theta, n, rng) -> np.ndarray:
        adj = self.data.copy() if self.init == "data" else np.zeros_like(self.data)
        stats, _ = _gibbs(theta, adj, self.burn_in, self.lag, int(n), rng, False)
        return stats

    def forward_sim(self, theta, seed=None, rng=None) -> np.ndarray:
        rng = np.random.default_rng(seed) if rng is None else rng
        init = self.data if self.init == "data" else None
        return ergm_gibbs_forward(theta, self.data.shape[0], self.burn_in, self.lag, K=1, rng=rng, init=init)[0]

    def exact_log_partition(self, theta):
        n = self.data.shape[0]
        if n > MAX_BRUTEFORCE_NODES:
            return None
        return ergm_log_partition_bruteforce(theta, n)
