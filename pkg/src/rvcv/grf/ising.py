"""Ising model on a free-boundary rectangular lattice.

The sufficient statistic counts each unordered nearest-neighbour pair once,
``s(y) = sum_{<i,j>} y_i y_j``.  Summing over ordered pairs instead doubles
``s`` and halves the natural scale of ``theta``; pass ``double_count=True``
to any function here to use that convention.

Exact quantities come from a site-by-site transfer recursion.  Sites are
visited top to bottom within a column, columns left to right, and the state
is the "front" of the most recent spin in every row (``2**rows`` states).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np
from scipy.integrate import simpson, trapezoid

from ..errors import GridResolutionWarning, InvalidArgumentError, ResourceError

__all__ = [
    "IsingModel",
    "check_lattice",
    "ising_suff_stat",
    "ising_gibbs_forward",
    "ising_log_partition_exact",
    "ising_log_partition_and_mean",
    "ising_sample_exact",
    "ising_posterior_mean_grid",
    "ising_posterior_mode",
    "ising_posterior_mean_auto",
    "MAX_EXACT_ROWS",
]

MAX_EXACT_ROWS = 20


def check_lattice(lattice) -> np.ndarray:
    arr = np.asarray(lattice)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidArgumentError("lattice must be a non-empty 2-D array")
    if not np.all((arr == 1) | (arr == -1)):
        raise InvalidArgumentError("lattice entries must be -1 or +1")
    return arr.astype(np.int8)


def ising_suff_stat(lattice, double_count: bool = False) -> float:
    """Sum of ``y_i y_j`` over nearest-neighbour pairs (free boundary)."""
    y = check_lattice(lattice).astype(np.int64)
    s = np.sum(y[1:, :] * y[:-1, :]) + np.sum(y[:, 1:] * y[:, :-1])
    return float(2 * s if double_count else s)


# ---------------------------------------------------------------------------
# Gibbs sampling


@numba.njit(nogil=True, cache=True)
def _gibbs_chain(spins, coupling, burn_in, lag, n_draws, uniforms, out_stats, out_lattices, keep):
    rows, cols = spins.shape
    n_sites = rows * cols
    p_plus = np.empty(9)
    for k in range(9):
        p_plus[k] = 1.0 / (1.0 + math.exp(-2.0 * coupling * (k - 4)))
    s = 0
    for r in range(rows):
        for c in range(cols):
            if r + 1 < rows:
                s += spins[r, c] * spins[r + 1, c]
            if c + 1 < cols:
                s += spins[r, c] * spins[r, c + 1]
    site = 0
    u_pos = 0
    total = burn_in + n_draws * lag
    draw = 0
    for step in range(1, total + 1):
        c = site // rows
        r = site - c * rows
        nb = 0
        if r > 0:
            nb += spins[r - 1, c]
        if r + 1 < rows:
            nb += spins[r + 1, c]
        if c > 0:
            nb += spins[r, c - 1]
        if c + 1 < cols:
            nb += spins[r, c + 1]
        new = 1 if uniforms[u_pos] < p_plus[nb + 4] else -1
        u_pos += 1
        old = spins[r, c]
        if new != old:
            s += (new - old) * nb
            spins[r, c] = new
        site += 1
        if site == n_sites:
            site = 0
        if step > burn_in and (step - burn_in) % lag == 0:
            out_stats[draw] = s
            if keep:
                out_lattices[draw] = spins
            draw += 1


def _gibbs(theta, spins, burn_in, lag, K, rng, double_count, keep):
    if K < 1:
        raise InvalidArgumentError("K must be at least 1")
    if burn_in < 0 or lag < 1:
        raise InvalidArgumentError("burn_in must be >= 0 and lag >= 1")
    coupling = 2.0 * theta if double_count else float(theta)
    uniforms = rng.random(burn_in + K * lag)
    stats = np.empty(K, dtype=np.int64)
    lattices = np.empty((K if keep else 1,) + spins.shape, dtype=np.int8)
    _gibbs_chain(spins, coupling, burn_in, lag, K, uniforms, stats, lattices, keep)
    stats = stats.astype(float)
    if double_count:
        stats *= 2
    return stats, (lattices if keep else None)


def _as_rng(seed=None, rng=None):
    if rng is not None:
        return rng
    return np.random.default_rng(seed)


def ising_gibbs_forward(theta, rows, cols, burn_in=1000, lag=500, K=1, seed=None,
                        init=None, rng=None, double_count=False) -> np.ndarray:
    """Draw ``K`` lattices from one systematic-scan Gibbs chain.

    ``burn_in`` and ``lag`` count single-site updates.  The chain starts from
    ``init`` (default: iid uniform spins) and, after ``burn_in`` updates,
    records the state every ``lag`` updates.

    Returns
    -------
    ndarray of int8, shape (K, rows, cols)
    """
    rng = _as_rng(seed, rng)
    if init is None:
        spins = np.where(rng.random((rows, cols)) < 0.5, 1, -1).astype(np.int8)
    else:
        spins = check_lattice(init).copy()
        if spins.shape != (rows, cols):
            raise InvalidArgumentError("init lattice has the wrong shape")
    _, lattices = _gibbs(float(theta), spins, int(burn_in), int(lag), int(K), rng, double_count, True)
    return lattices


# ---------------------------------------------------------------------------
# Exact transfer recursion


def _site_weights(theta_j, left, up):
    """exp(theta * energy) indexed [t, old, new, up] for one site."""
    sig = np.array([-1.0, 1.0])
    energy = np.zeros((2, 2, 2))
    if left:
        energy += sig[:, None, None] * sig[None, :, None]
    if up:
        energy += sig[None, :, None] * sig[None, None, :]
    return np.exp(theta_j[:, None, None, None] * energy), energy


def _check_exact_size(rows, cols):
    rows, cols = int(rows), int(cols)
    if rows < 1 or cols < 1:
        raise InvalidArgumentError("lattice dimensions must be positive")
    if min(rows, cols) > MAX_EXACT_ROWS:
        raise ResourceError(
            f"exact Ising recursion needs 2**{min(rows, cols)} states; limit is 2**{MAX_EXACT_ROWS}"
        )
    return (rows, cols) if rows <= cols else (cols, rows)


def _recursion(theta_j, rows, cols, with_derivative, store=False):
    """Run the forward recursion for an array of effective couplings.

    Returns log Z, dlogZ/dcoupling and optionally the per-site normalised
    tables (only used for exact sampling).
    """
    T = theta_j.size
    n_states = 1 << rows
    Z = np.zeros((T, n_states))
    Z[:, 0] = 1.0
    dZ = np.zeros_like(Z) if with_derivative else None
    log_scale = np.zeros(T)
    tables = [] if store else None
    for c in range(cols):
        for r in range(rows):
            if store:
                tables.append(Z[0].copy())
            w, energy = _site_weights(theta_j, c > 0, r > 0)
            hi = n_states >> (r + 1)
            if r == 0:
                Zv = Z.reshape(T, hi, 2, 1, 1)
                wv = w[:, :, :, :1]
                ev = energy[:, :, :1]
            else:
                Zv = Z.reshape(T, hi, 2, 2, 1 << (r - 1))
                wv = w
                ev = energy
            # new[t,h,n,u,l] = sum_o Z[t,h,o,u,l] * w[t,o,n,u]
            wb = wv[:, None, :, :, :, None]
            new = Zv[:, :, 0, None] * wb[:, :, 0] + Zv[:, :, 1, None] * wb[:, :, 1]
            if with_derivative:
                dZv = dZ.reshape(Zv.shape)
                we = wb * ev[None, None, :, :, :, None]
                dnew = (dZv[:, :, 0, None] * wb[:, :, 0] + dZv[:, :, 1, None] * wb[:, :, 1]
                        + Zv[:, :, 0, None] * we[:, :, 0] + Zv[:, :, 1, None] * we[:, :, 1])
                dZ = dnew.reshape(T, n_states)
            Z = new.reshape(T, n_states)
            scale = Z.max(axis=1)
            Z /= scale[:, None]
            if with_derivative:
                dZ /= scale[:, None]
            log_scale += np.log(scale)
    total = Z.sum(axis=1)
    log_z = log_scale + np.log(total)
    mean = dZ.sum(axis=1) / total if with_derivative else None
    return log_z, mean, (tables, Z[0]) if store else None


@numba.njit(nogil=True, cache=True)
def _recursion_nb(coupling, rows, cols, with_derivative):
    """Scalar-coupling version of :func:`_recursion` without stored tables."""
    n = 1 << rows
    Z = np.zeros(n)
    dZ = np.zeros(n)
    new = np.empty(n)
    dnew = np.empty(n)
    Z[0] = 1.0
    w = np.empty(5)
    for e in range(5):
        w[e] = math.exp(coupling * (e - 2))
    log_scale = 0.0
    for c in range(cols):
        for r in range(rows):
            mask = ~(1 << r)
            scale = 0.0
            for idx in range(n):
                sn = 2 * ((idx >> r) & 1) - 1
                up = 0
                if r > 0:
                    up = sn * (2 * ((idx >> (r - 1)) & 1) - 1)
                base = idx & mask
                acc = 0.0
                dacc = 0.0
                for o in range(2):
                    src = base | (o << r)
                    e = up
                    if c > 0:
                        e += (2 * o - 1) * sn
                    wt = w[e + 2]
                    acc += Z[src] * wt
                    if with_derivative:
                        dacc += (dZ[src] + Z[src] * e) * wt
                new[idx] = acc
                dnew[idx] = dacc
                if acc > scale:
                    scale = acc
            for idx in range(n):
                Z[idx] = new[idx] / scale
                dZ[idx] = dnew[idx] / scale
            log_scale += math.log(scale)
    total = 0.0
    dtotal = 0.0
    for idx in range(n):
        total += Z[idx]
        dtotal += dZ[idx]
    return log_scale + math.log(total), dtotal / total


def _recursion_fast(theta_j, rows, cols, with_derivative):
    lz = np.empty(theta_j.size)
    mean = np.empty(theta_j.size)
    for k, t in enumerate(theta_j):
        lz[k], mean[k] = _recursion_nb(float(t), rows, cols, with_derivative)
    return lz, mean


def ising_log_partition_and_mean(theta, rows, cols, double_count=False):
    """Exact ``log Z(theta)`` and ``E_theta[s(Y)]`` (its derivative).

    ``theta`` may be a scalar or an array; outputs have its shape.
    """
    rows, cols = _check_exact_size(rows, cols)
    theta = np.asarray(theta, dtype=float)
    factor = 2.0 if double_count else 1.0
    log_z, mean = _recursion_fast(factor * theta.ravel(), rows, cols, True)
    log_z, mean = log_z.reshape(theta.shape), (factor * mean).reshape(theta.shape)
    if theta.ndim == 0:
        return float(log_z), float(mean)
    return log_z, mean


def ising_log_partition_exact(theta, rows, cols, double_count=False):
    """Exact log partition function by transfer recursion in log space."""
    rows, cols = _check_exact_size(rows, cols)
    theta = np.asarray(theta, dtype=float)
    factor = 2.0 if double_count else 1.0
    log_z = _recursion_fast(factor * theta.ravel(), rows, cols, False)[0].reshape(theta.shape)
    return float(log_z) if theta.ndim == 0 else log_z


def ising_sample_exact(theta, rows, cols, K=1, seed=None, rng=None, double_count=False) -> np.ndarray:
    """Independent exact draws by forward filtering, backward sampling.

    Memory grows as ``rows * cols * 2**min(rows, cols)``; intended for data
    generation and small lattices.
    """
    rng = _as_rng(seed, rng)
    transpose = rows > cols
    R, C = _check_exact_size(rows, cols)
    coupling = np.array([2.0 * theta if double_count else float(theta)])
    _, _, (tables, final) = _recursion(coupling, R, C, False, store=True)
    p = final / final.sum()
    front = rng.choice(p.size, size=K, p=p)
    out = np.empty((K, R, C), dtype=np.int8)
    w, _ = _site_weights(coupling, True, True)
    w = w[0]
    sites = [(r, c) for c in range(C) for r in range(R)]
    for t in range(len(sites) - 1, -1, -1):
        r, c = sites[t]
        new = (front >> r) & 1
        out[:, r, c] = 2 * new - 1
        if c == 0:
            front = front & ~(1 << r)
            continue
        prev = tables[t]
        up = (front >> (r - 1)) & 1 if r > 0 else np.zeros_like(front)
        f0 = front & ~(1 << r)
        f1 = f0 | (1 << r)
        if r > 0:
            w0 = w[0, new, up]
            w1 = w[1, new, up]
        else:
            # no vertical bond at the top row: weight depends on old and new only
            w0 = np.exp(coupling[0] * np.where(new == 0, 1.0, -1.0))
            w1 = np.exp(coupling[0] * np.where(new == 1, 1.0, -1.0))
        a0 = prev[f0] * w0
        a1 = prev[f1] * w1
        pick1 = rng.random(K) * (a0 + a1) < a1
        front = np.where(pick1, f1, f0)
    if transpose:
        out = out.transpose(0, 2, 1).copy()
    return out


def ising_posterior_mean_grid(data, prior_sd, grid, double_count=False, rtol=1e-6) -> float:
    """Posterior mean of ``theta`` by quadrature on ``grid`` with a ``N(0, prior_sd^2)`` prior.

    Warns with :class:`GridResolutionWarning` when the trapezoid and Simpson
    estimates disagree by more than ``rtol`` (relative).
    """
    y = check_lattice(data)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError("grid must be a strictly increasing vector of length >= 3")
    if prior_sd <= 0:
        raise InvalidArgumentError("prior_sd must be positive")
    s = ising_suff_stat(y, double_count)
    log_z = ising_log_partition_exact(grid, *y.shape, double_count=double_count)
    log_post = grid * s - log_z - 0.5 * (grid / prior_sd) ** 2
    w = np.exp(log_post - log_post.max())
    means = []
    for rule in (trapezoid, simpson):
        means.append(rule(grid * w, x=grid) / rule(w, x=grid))
    trap, simp = means
    scale = max(abs(simp), np.sqrt(rule((grid - simp) ** 2 * w, x=grid) / rule(w, x=grid)))
    if abs(trap - simp) > rtol * scale:
        warnings.warn(
            f"posterior-mean grid too coarse: trapezoid {trap:.10g} vs Simpson {simp:.10g}",
            GridResolutionWarning,
            stacklevel=2,
        )
    if w[0] > 1e-8 or w[-1] > 1e-8:
        warnings.warn("posterior mass is not negligible at the grid ends", GridResolutionWarning, stacklevel=2)
    return float(simp)



def ising_posterior_mode(data, prior_sd, double_count=False, lo=-3.0, hi=3.0, tol=1e-7):
    """Posterior mode and curvature-based scale of ``theta``.

    The log posterior is concave, so the root of its derivative
    ``s(y) - E_theta[s] - theta / prior_sd^2`` is bracketed and refined.

    Returns
    -------
    mode, sd : float
        ``sd`` is ``1/sqrt(-d^2 log posterior / d theta^2)`` at the mode.
    """
    y = check_lattice(data)
    s = ising_suff_stat(y, double_count)

    def grad(t):
        _, mean = ising_log_partition_and_mean(t, *y.shape, double_count=double_count)
        return s - mean - t / prior_sd**2

    while hi - lo > tol:
        pts = np.linspace(lo, hi, 9)
        g = grad(pts)
        k = int(np.searchsorted(-g, 0.0))
        lo, hi = pts[max(k - 1, 0)], pts[min(k, 8)]
        if k in (0, 9):
            break
    mode = 0.5 * (lo + hi)
    h = 1e-4
    g = grad(np.array([mode - h, mode + h]))
    curv = (g[0] - g[1]) / (2 * h)
    return float(mode), float(1.0 / np.sqrt(curv))


def ising_posterior_mean_auto(data, prior_sd, points=101, width=8.0, double_count=False):
    """Grid posterior mean on ``mode +/- width * sd`` with ``points`` nodes.

    Returns ``(mean, grid)``.
    """
    mode, sd = ising_posterior_mode(data, prior_sd, double_count)
    grid = np.linspace(mode - width * sd, mode + width * sd, int(points))
    return ising_posterior_mean_grid(data, prior_sd, grid, double_count), grid


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IsingModel:
    """Ising likelihood with observed lattice and Gaussian prior.

    ``sampler`` selects forward simulation: ``"gibbs"`` (one chain started
    from ``init``, ``"data"`` or ``"random"``) or ``"exact"`` (backward
    sampling through the transfer recursion; small lattices only).
    """

    data: np.ndarray
    prior_sd: float = 5.0
    burn_in: int = 1000
    lag: int = 500
    sampler: str = "gibbs"
    init: str = "data"
    double_count: bool = False
    name: str = "ising"

    def __post_init__(self):
        object.__setattr__(self, "data", check_lattice(self.data))
        if self.sampler not in ("gibbs", "exact"):
            raise InvalidArgumentError(f"unknown sampler {self.sampler!r}")
        if self.init not in ("data", "random"):
            raise InvalidArgumentError(f"unknown init {self.init!r}")

    dim = 1

    @property
    def s_obs(self) -> np.ndarray:
        return np.array([ising_suff_stat(self.data, self.double_count)])

    def suff_stat(self, lattice) -> np.ndarray:
        return np.array([ising_suff_stat(lattice, self.double_count)])

    def log_prior(self, theta) -> float:
        t = float(np.asarray(theta).ravel()[0])
        return -0.5 * (t / self.prior_sd) ** 2

    def grad_log_prior(self, theta) -> np.ndarray:
        return -np.atleast_1d(np.asarray(theta, dtype=float)) / self.prior_sd**2

    def simulate_stats(self, theta, n, rng) -> np.ndarray:
        """Sufficient statistics of ``n`` forward simulations, shape (n, 1)."""
        t = float(np.asarray(theta).ravel()[0])
        rows, cols = self.data.shape
        if self.sampler == "exact":
            lat = ising_sample_exact(t, rows, cols, K=n, rng=rng, double_count=self.double_count)
            y = lat.astype(np.int64)
            s = (y[:, 1:, :] * y[:, :-1, :]).sum(axis=(1, 2)) + (y[:, :, 1:] * y[:, :, :-1]).sum(axis=(1, 2))
            s = s.astype(float) * (2 if self.double_count else 1)
            return s[:, None]
        if self.init == "data":
            spins = self.data.copy()
        else:
            spins = np.where(rng.random(self.data.shape) < 0.5, 1, -1).astype(np.int8)
        stats, _ = _gibbs(t, spins, self.burn_in, self.lag, int(n), rng, self.double_count, False)
        return stats[:, None]

    def forward_sim(self, theta, seed=None, rng=None) -> np.ndarray:
        """One lattice drawn from the likelihood at ``theta``."""
        rng = _as_rng(seed, rng)
        t = float(np.asarray(theta).ravel()[0])
        rows, cols = self.data.shape
        if self.sampler == "exact":
            return ising_sample_exact(t, rows, cols, K=1, rng=rng, double_count=self.double_count)[0]
        init = self.data if self.init == "data" else None
        return ising_gibbs_forward(t, rows, cols, self.burn_in, self.lag, K=1, rng=rng, init=init,
                                   double_count=self.double_count)[0]

    def exact_log_partition(self, theta) -> float:
        return ising_log_partition_exact(float(np.asarray(theta).ravel()[0]), *self.data.shape,
                                         double_count=self.double_count)
