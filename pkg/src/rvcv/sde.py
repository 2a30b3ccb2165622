"""SIR diffusion: Euler-Maruyama likelihood, path score and bridge sampling.

States are ``(X1, X2)`` = (susceptible, infected) proportions.  The drift
and diffusion are

    alpha = [-t1 X1 X2, t1 X1 X2 - t2 X2]
    beta  = (1/N) [[t1 X1 X2, -t1 X1 X2], [-t1 X1 X2, t1 X1 X2 + t2 X2]]

and one Euler-Maruyama step over ``dt`` is ``N(X + alpha dt, beta dt)``.
Observations are exact (noise-free) states; the unobserved states between
them are imputed by Metropolis-Hastings with modified-diffusion-bridge
proposals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from .errors import InvalidArgumentError, MixingWarning, NumericalDegeneracyError, SimulationError

__all__ = [
    "SirParams",
    "SdePath",
    "sir_drift",
    "sir_diffusion",
    "em_log_likelihood",
    "sde_path_score",
    "simulate_sir",
    "observe",
    "BridgeSample",
    "bridge_sample_latent",
    "SirModel",
    "read_observations",
    "write_observations",
    "JITTER",
]

JITTER = 1e-8
_EIG_FLOOR = 1e-12
_LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class SirParams:
    theta: tuple[float, float]
    N: float = 1000

    def __post_init__(self):
        t = tuple(float(v) for v in np.asarray(self.theta, dtype=float).ravel())
        if len(t) != 2 or not all(v > 0 for v in t):
            raise InvalidArgumentError("SIR rates must be two positive numbers")
        if not self.N > 0:
            raise InvalidArgumentError("population size must be positive")
        object.__setattr__(self, "theta", t)


@dataclass(frozen=True)
class SdePath:
    times: np.ndarray
    states: np.ndarray
    observed_mask: np.ndarray = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if times.ndim != 1 or states.shape != (times.size, 2):
            raise InvalidArgumentError("states must have shape (len(times), 2)")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise InvalidArgumentError("times must be strictly increasing")
        if times.size > 2:
            steps = np.diff(times)
            if np.max(np.abs(steps - steps.mean())) > 1e-6 * steps.mean():
                raise InvalidArgumentError("times must have a constant mesh")
        if not np.all(np.isfinite(states)):
            raise InvalidArgumentError("states must be finite")
        mask = np.ones(times.size, dtype=bool) if self.observed_mask is None else np.asarray(self.observed_mask, bool)
        if mask.shape != times.shape:
            raise InvalidArgumentError("observed_mask must match times")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "observed_mask", mask)

    @property
    def dt(self) -> float:
        return float(np.mean(np.diff(self.times)))

    def segment(self, start, stop) -> "SdePath":
        return SdePath(self.times[start:stop], self.states[start:stop], self.observed_mask[start:stop])


# ---------------------------------------------------------------------------
# model terms, vectorised over leading axes


def _theta(params):
    if isinstance(params, SirParams):
        return params.theta[0], params.theta[1], float(params.N)
    raise InvalidArgumentError("params must be SirParams")


def sir_drift(x, params) -> np.ndarray:
    t1, t2, _ = _theta(params)
    x = np.asarray(x, dtype=float)
    inf = t1 * x[..., 0] * x[..., 1]
    return np.stack([-inf, inf - t2 * x[..., 1]], axis=-1)


def sir_diffusion(x, params) -> np.ndarray:
    t1, t2, N = _theta(params)
    x = np.asarray(x, dtype=float)
    a = t1 * x[..., 0] * x[..., 1]
    b = t2 * x[..., 1]
    out = np.empty(x.shape[:-1] + (2, 2))
    out[..., 0, 0] = a
    out[..., 0, 1] = -a
    out[..., 1, 0] = -a
    out[..., 1, 1] = a + b
    return out / N


def _terms(x_prev, x_next, dt, t1, t2, N, want_score):
    """Log density (and theta-score) of each Euler-Maruyama transition.

    Returns ``(logpdf, score, status)`` where ``status`` is 0 for a regular
    transition, 1 for a frozen transition (zero diffusion and zero
    increment; contributes nothing) and 2 for an impossible one (indefinite
    or singular diffusion with a nonzero increment).
    """
    x1 = x_prev[..., 0]
    x2 = x_prev[..., 1]
    a = x1 * x2
    inf = t1 * a
    rec = t2 * x2
    alpha0 = -inf
    alpha1 = inf - rec
    r0 = x_next[..., 0] - x_prev[..., 0] - alpha0 * dt
    r1 = x_next[..., 1] - x_prev[..., 1] - alpha1 * dt
    # beta = [[p, -p], [-p, p + q]] / N
    p = inf / N
    q = rec / N
    b00 = p
    b01 = -p
    b11 = p + q
    tr = b00 + b11
    det = b00 * b11 - b01 * b01
    half = 0.5 * tr
    disc = np.sqrt(np.maximum(half * half - det, 0.0))
    lam_min = half - disc
    # derivative matrices: d beta/d t1 = a/N [[1,-1],[-1,1]], d beta/d t2 = x2/N [[0,0],[0,1]]
    d1_00 = a / N
    d1_01 = -a / N
    d1_11 = a / N
    d2_00 = np.zeros_like(a)
    d2_01 = np.zeros_like(a)
    d2_11 = x2 / N
    jit = (lam_min < _EIG_FLOOR * tr) & (tr > 0)
    eps = np.where(jit, JITTER, 0.0)
    b00 = b00 + eps * half
    b11 = b11 + eps * half
    d1_00 = d1_00 + eps * 0.5 * (d1_00 + d1_11)
    d1_11 = d1_11 + eps * 0.5 * (a / N + a / N)
    d2_00 = d2_00 + eps * 0.5 * d2_11
    d2_11 = d2_11 + eps * 0.5 * (x2 / N)
    det = b00 * b11 - b01 * b01

    frozen = (tr == 0) & (r0 == 0) & (r1 == 0)
    bad = ~frozen & ((det <= 0) | (b00 <= 0) | (b11 <= 0) | ~np.isfinite(det))
    status = np.where(frozen, 1, np.where(bad, 2, 0))
    safe = status == 0
    det_s = np.where(safe, det, 1.0)
    i00 = np.where(safe, b11 / det_s, 0.0)
    i01 = np.where(safe, -b01 / det_s, 0.0)
    i11 = np.where(safe, b00 / det_s, 0.0)
    dt_s = np.where(safe, dt, 1.0)
    quad = (i00 * r0 * r0 + 2 * i01 * r0 * r1 + i11 * r1 * r1) / dt_s
    logpdf = -_LOG_2PI - 0.5 * np.log(det_s * dt_s * dt_s) - 0.5 * quad
    logpdf = np.where(safe, logpdf, np.where(frozen, 0.0, -np.inf))
    if not want_score:
        return logpdf, None, status
    # v = beta^{-1} r
    v0 = i00 * r0 + i01 * r1
    v1 = i01 * r0 + i11 * r1
    score = np.empty(x_prev.shape[:-1] + (2,))
    # d alpha/d t1 = [-a, a]; d alpha/d t2 = [0, -x2]
    for j, (da0, da1, e00, e01, e11) in enumerate(
        ((-a, a, d1_00, d1_01, d1_11), (np.zeros_like(a), -x2, d2_00, d2_01, d2_11))
    ):
        tr_term = i00 * e00 + 2 * i01 * e01 + i11 * e11
        lin = da0 * v0 + da1 * v1
        quad_j = (v0 * (e00 * v0 + e01 * v1) + v1 * (e01 * v0 + e11 * v1)) / dt_s
        score[..., j] = np.where(safe, -0.5 * tr_term + lin + 0.5 * quad_j, 0.0)
    return logpdf, score, status


def _check_path(path):
    if not isinstance(path, SdePath):
        raise InvalidArgumentError("path must be an SdePath")
    if path.times.size < 2:
        raise InvalidArgumentError("path needs at least two time points")


def _raise_bad(status):
    idx = np.flatnonzero(status == 2)
    if idx.size:
        step = int(idx[0]) + 1
        raise NumericalDegeneracyError(f"diffusion matrix singular or indefinite at step {step}", step=step)


def em_log_likelihood(path: SdePath, params: SirParams) -> float:
    """Sum of Gaussian Euler-Maruyama transition log-densities along ``path``.

    The theta-dependent normalisation ``-0.5 log det(2 pi beta dt)`` is
    included.  Transitions with zero diffusion and zero increment contribute
    nothing.
    """
    _check_path(path)
    t1, t2, N = _theta(params)
    x = path.states
    logpdf, _, status = _terms(x[:-1], x[1:], np.diff(path.times), t1, t2, N, False)
    _raise_bad(status)
    return float(np.sum(logpdf))


def sde_path_score(path: SdePath, params: SirParams) -> np.ndarray:
    """Analytic gradient of :func:`em_log_likelihood` with respect to ``(theta1, theta2)``."""
    _check_path(path)
    t1, t2, N = _theta(params)
    x = path.states
    _, score, status = _terms(x[:-1], x[1:], np.diff(path.times), t1, t2, N, True)
    _raise_bad(status)
    return score.sum(axis=0)


def simulate_sir(params: SirParams, X0=(0.99, 0.01), t_end=35.0, dt=0.01, seed=None, rng=None) -> SdePath:
    """Euler-Maruyama forward simulation on the grid ``0, dt, ..., t_end``.

    States are floored at zero (an empty compartment stays empty).
    """
    if not dt > 0:
        raise InvalidArgumentError("dt must be positive")
    rng = np.random.default_rng(seed) if rng is None else rng
    n = int(round(t_end / dt))
    times = np.arange(n + 1) * dt
    x = np.empty((n + 1, 2))
    x[0] = np.asarray(X0, dtype=float)
    z = rng.standard_normal((n, 2))
    t1, t2, N = _theta(params)
    for i in range(n):
        x1, x2 = x[i]
        a = t1 * x1 * x2
        b = t2 * x2
        # Cholesky of [[a, -a], [-a, a + b]] / N
        l11 = math.sqrt(max(a, 0.0) / N)
        l21 = -l11
        l22 = math.sqrt(max(b, 0.0) / N)
        sd = math.sqrt(dt)
        nxt0 = x1 - a * dt + sd * l11 * z[i, 0]
        nxt1 = x2 + (a - b) * dt + sd * (l21 * z[i, 0] + l22 * z[i, 1])
        if not (math.isfinite(nxt0) and math.isfinite(nxt1)):
            raise SimulationError(f"SIR simulation diverged at step {i + 1}")
        x[i + 1] = (max(nxt0, 0.0), max(nxt1, 0.0))
    return SdePath(times, x)


def observe(path: SdePath, n_obs: int) -> tuple[np.ndarray, np.ndarray]:
    """Pick ``n_obs`` evenly spaced points (first and last included)."""
    idx = np.round(np.linspace(0, path.times.size - 1, n_obs)).astype(int)
    return path.times[idx].copy(), path.states[idx].copy()


# ---------------------------------------------------------------------------
# bridge sampling


def _chol2(c00, c01, c11):
    l00 = np.sqrt(np.maximum(c00, 0.0))
    l10 = np.where(l00 > 0, c01 / np.where(l00 > 0, l00, 1.0), 0.0)
    l11 = np.sqrt(np.maximum(c11 - l10 * l10, 0.0))
    return l00, l10, l11


def _gauss_logpdf2(d0, d1, c00, c01, c11):
    det = c00 * c11 - c01 * c01
    ok = (det > 0) & (c00 > 0)
    det_s = np.where(ok, det, 1.0)
    quad = (c11 * d0 * d0 - 2 * c01 * d0 * d1 + c00 * d1 * d1) / det_s
    return np.where(ok, -_LOG_2PI - 0.5 * np.log(det_s) - 0.5 * quad, -np.inf)


def _mdb(start, end, dts, m, t1, t2, N, rng=None, given=None):
    """Draw (or score) latent points under the modified diffusion bridge.

    ``start``/``end`` have shape (..., 2), ``dts`` broadcasts against the
    leading axes.  Returns ``(points, logq)`` with points of shape
    (..., m, 2).
    """
    shape = start.shape[:-1]
    pts = np.empty(shape + (m, 2)) if given is None else given
    logq = np.zeros(shape)
    x = start
    for j in range(m):
        remaining = (m + 1 - j) * dts
        mean = x + (end - x) * (dts / remaining)[..., None]
        shrink = dts * (remaining - dts) / remaining
        a = t1 * x[..., 0] * x[..., 1]
        b = t2 * x[..., 1]
        c00 = a / N * shrink
        c01 = -a / N * shrink
        c11 = (a + b) / N * shrink
        if given is None:
            l00, l10, l11 = _chol2(c00, c01, c11)
            z = rng.standard_normal(shape + (2,))
            nxt = np.stack([mean[..., 0] + l00 * z[..., 0],
                            mean[..., 1] + l10 * z[..., 0] + l11 * z[..., 1]], axis=-1)
            pts[..., j, :] = nxt
        else:
            nxt = pts[..., j, :]
        logq = logq + _gauss_logpdf2(nxt[..., 0] - mean[..., 0], nxt[..., 1] - mean[..., 1], c00, c01, c11)
        x = nxt
    return pts, logq


def _gap_loglik(start, latent, end, dts, t1, t2, N):
    """Euler-Maruyama log-density of each gap's sub-path, shape = leading axes."""
    full = np.concatenate([start[..., None, :], latent, end[..., None, :]], axis=-2)
    logpdf, _, status = _terms(full[..., :-1, :], full[..., 1:, :], dts[..., None], t1, t2, N, False)
    negative = np.any(latent < 0, axis=(-1, -2))
    out = logpdf.sum(axis=-1)
    return np.where(negative, -np.inf, out)


@dataclass
class BridgeSample:
    """Latent imputations for ``K`` independent bridge chains."""

    times: np.ndarray
    paths: np.ndarray  # (K, T, 2)
    observed_mask: np.ndarray
    acceptance_rate: np.ndarray  # (n_gaps,)
    mixing_failure: bool = False
    stuck_gaps: list = field(default_factory=list)

    def path(self, k: int = 0) -> SdePath:
        return SdePath(self.times, self.paths[k], self.observed_mask)


def _layout(obs_times, m):
    obs_times = np.asarray(obs_times, dtype=float)
    gaps = np.diff(obs_times)
    dts = gaps / (m + 1)
    times = np.concatenate(
        [obs_times[g] + dts[g] * np.arange(m + 1) for g in range(gaps.size)] + [obs_times[-1:]]
    )
    mask = np.zeros(times.size, dtype=bool)
    mask[:: m + 1] = True
    return dts, times, mask


def _assemble(obs_states, latent):
    """Interleave observations (G+1, 2) with latent (K, G, m, 2) -> (K, T, 2)."""
    K, G, m, _ = latent.shape
    blocks = np.concatenate(
        [np.broadcast_to(obs_states[:-1][None, :, None, :], (K, G, 1, 2)), latent], axis=2
    ).reshape(K, G * (m + 1), 2)
    last = np.broadcast_to(obs_states[-1], (K, 1, 2))
    return np.concatenate([blocks, last], axis=1)


def _init_latent(start, end, dts, m, t1, t2, N, rng, tries=20):
    pts, _ = _mdb(start, end, dts, m, t1, t2, N, rng=rng)
    for _ in range(tries):
        bad = np.any(pts < 0, axis=(-1, -2))
        if not np.any(bad):
            break
        fresh, _ = _mdb(start, end, dts, m, t1, t2, N, rng=rng)
        pts = np.where(bad[..., None, None], fresh, pts)
    bad = np.any(pts < 0, axis=(-1, -2))
    if np.any(bad):
        frac = (np.arange(1, m + 1) / (m + 1))[:, None]
        lin = start[..., None, :] + (end - start)[..., None, :] * frac
        pts = np.where(bad[..., None, None], lin, pts)
    return pts


def _bridge_sweeps(latent, obs_states, dts, n_steps, t1, t2, N, rng, window=None):
    """Independence-MH sweeps over every (chain, gap) block, in place."""
    K, G, m, _ = latent.shape
    start = np.broadcast_to(obs_states[:-1], (K, G, 2))
    end = np.broadcast_to(obs_states[1:], (K, G, 2))
    dtk = np.broadcast_to(dts, (K, G))
    cur_ll = _gap_loglik(start, latent, end, dtk, t1, t2, N)
    _, cur_lq = _mdb(start, end, dtk, m, t1, t2, N, given=latent)
    accepts = np.zeros((n_steps, G))
    for step in range(n_steps):
        prop, prop_lq = _mdb(start, end, dtk, m, t1, t2, N, rng=rng)
        prop_ll = _gap_loglik(start, prop, end, dtk, t1, t2, N)
        with np.errstate(invalid="ignore"):
            log_ratio = (prop_ll - prop_lq) - (cur_ll - cur_lq)
        log_ratio = np.where(np.isfinite(prop_ll) & np.isfinite(prop_lq), log_ratio, -np.inf)
        log_ratio = np.where(np.isfinite(cur_ll), log_ratio, np.where(np.isfinite(prop_ll), np.inf, -np.inf))
        acc = np.log(rng.random((K, G))) < log_ratio
        latent[acc] = prop[acc]
        cur_ll = np.where(acc, prop_ll, cur_ll)
        cur_lq = np.where(acc, prop_lq, cur_lq)
        accepts[step] = acc.mean(axis=0)
    window = n_steps if window is None else min(window, n_steps)
    stuck = [] if n_steps == 0 else [int(g) for g in np.flatnonzero(accepts[-window:].sum(axis=0) == 0)]
    rate = accepts.mean(axis=0) if n_steps else np.ones(G)
    return rate, stuck


def bridge_sample_latent(params: SirParams, obs_times, obs_states, n_latent_per_gap=5, n_steps=50,
                         seed=None, K=1, rng=None, init=None, window=None) -> BridgeSample:
    """Impute latent states between exact observations.

    Each of ``K`` independent chains starts from a bridge draw (or ``init``,
    shape (K, G, m, 2)) and runs ``n_steps`` independence Metropolis-Hastings
    sweeps; a sweep proposes a fresh modified-diffusion-bridge path for every
    gap and accepts or rejects it against the Euler-Maruyama density.  Gaps
    with no acceptance in the last ``window`` sweeps raise a
    :class:`MixingWarning` and are listed in ``stuck_gaps``.
    """
    rng = np.random.default_rng(seed) if rng is None else rng
    t1, t2, N = _theta(params)
    obs_times = np.asarray(obs_times, dtype=float)
    obs_states = np.asarray(obs_states, dtype=float)
    if obs_times.ndim != 1 or obs_times.size < 2 or obs_states.shape != (obs_times.size, 2):
        raise InvalidArgumentError("need at least two observations with states of shape (n, 2)")
    if np.any(np.diff(obs_times) <= 0):
        raise InvalidArgumentError("observation times must be increasing")
    m = int(n_latent_per_gap)
    if m < 0:
        raise InvalidArgumentError("n_latent_per_gap must be >= 0")
    dts, times, mask = _layout(obs_times, m)
    G = obs_times.size - 1
    if m == 0:
        paths = np.broadcast_to(obs_states, (K,) + obs_states.shape).copy()
        return BridgeSample(times, paths, mask, np.ones(G))
    if init is None:
        start = np.broadcast_to(obs_states[:-1], (K, G, 2))
        end = np.broadcast_to(obs_states[1:], (K, G, 2))
        latent = _init_latent(start, end, np.broadcast_to(dts, (K, G)), m, t1, t2, N, rng)
    else:
        latent = np.array(init, dtype=float).reshape(K, G, m, 2)
    rate, stuck = _bridge_sweeps(latent, obs_states, dts, int(n_steps), t1, t2, N, rng, window)
    if stuck:
        warnings.warn(f"bridge sampler made no moves in gaps {stuck}", MixingWarning, stacklevel=2)
    return BridgeSample(times, _assemble(obs_states, latent), mask, rate, bool(stuck), stuck)


# ---------------------------------------------------------------------------


def _gamma_logpdf(x, shape, scale):
    return (shape - 1) * np.log(x) - x / scale - gammaln(shape) - shape * np.log(scale)


@dataclass(frozen=True)
class SirModel:
    """Discretely observed SIR diffusion with independent Gamma priors on the rates.

    Complete-data scores ``grad log p(theta, x | y)`` averaged over ``K``
    latent imputations give the Fisher's-identity score estimate.
    """

    obs_times: np.ndarray
    obs_states: np.ndarray
    N: float = 1000
    n_latent_per_gap: int = 5
    prior_shape: float = 2.0
    prior_scale: float = 2.0
    inner_steps: int = 50
    name: str = "sir"

    def __post_init__(self):
        object.__setattr__(self, "obs_times", np.asarray(self.obs_times, dtype=float))
        object.__setattr__(self, "obs_states", np.asarray(self.obs_states, dtype=float))
        if self.obs_states.shape != (self.obs_times.size, 2) or self.obs_times.size < 2:
            raise InvalidArgumentError("observations must be (n, 2) with n >= 2")

    dim = 2

    @property
    def n_gaps(self) -> int:
        return self.obs_times.size - 1

    @property
    def dts(self) -> np.ndarray:
        return np.diff(self.obs_times) / (self.n_latent_per_gap + 1)

    def params(self, theta) -> SirParams:
        return SirParams(tuple(np.asarray(theta, dtype=float)), self.N)

    def log_prior(self, theta) -> float:
        t = np.asarray(theta, dtype=float)
        if np.any(t <= 0):
            return -np.inf
        return float(np.sum(_gamma_logpdf(t, self.prior_shape, self.prior_scale)))

    def grad_log_prior(self, theta) -> np.ndarray:
        t = np.asarray(theta, dtype=float)
        return (self.prior_shape - 1) / t - 1.0 / self.prior_scale

    def full_paths(self, latent) -> np.ndarray:
        latent = np.asarray(latent, dtype=float)
        if latent.ndim == 3:
            latent = latent[None]
        return _assemble(self.obs_states, latent)

    def complete_loglik(self, theta, latent) -> np.ndarray:
        """Euler-Maruyama log-density of observed+latent paths, one value per chain."""
        t1, t2 = np.asarray(theta, dtype=float)
        if t1 <= 0 or t2 <= 0:
            return np.full(np.asarray(latent).reshape(-1, self.n_gaps, self.n_latent_per_gap, 2).shape[0], -np.inf)
        lat = np.asarray(latent, dtype=float).reshape(-1, self.n_gaps, self.n_latent_per_gap, 2)
        K = lat.shape[0]
        start = np.broadcast_to(self.obs_states[:-1], (K, self.n_gaps, 2))
        end = np.broadcast_to(self.obs_states[1:], (K, self.n_gaps, 2))
        return _gap_loglik(start, lat, end, np.broadcast_to(self.dts, (K, self.n_gaps)), t1, t2, self.N).sum(axis=1)

    def path_scores(self, theta, latent) -> np.ndarray:
        """``grad_theta log p(X | theta)`` for each chain, shape (K, 2)."""
        t1, t2 = np.asarray(theta, dtype=float)
        paths = self.full_paths(latent)
        dt = np.repeat(self.dts, self.n_latent_per_gap + 1)
        _, score, status = _terms(paths[:, :-1], paths[:, 1:], dt, t1, t2, self.N, True)
        _raise_bad(status)
        return score.sum(axis=1)

    def init_latent(self, theta, K, rng) -> np.ndarray:
        t1, t2 = np.asarray(theta, dtype=float)
        G, m = self.n_gaps, self.n_latent_per_gap
        start = np.broadcast_to(self.obs_states[:-1], (K, G, 2))
        end = np.broadcast_to(self.obs_states[1:], (K, G, 2))
        return _init_latent(start, end, np.broadcast_to(self.dts, (K, G)), m, t1, t2, self.N, rng)

    def sweep(self, theta, latent, n_steps, rng):
        """Run bridge MH sweeps on ``latent`` (K, G, m, 2) in place; returns per-gap acceptance."""
        t1, t2 = np.asarray(theta, dtype=float)
        rate, _ = _bridge_sweeps(latent, self.obs_states, self.dts, n_steps, t1, t2, self.N, rng)
        return rate

    def latent_draws(self, theta, K, rng, n_steps=None):
        """``K`` approximately independent draws from ``p(x | theta, y)``."""
        latent = self.init_latent(theta, K, rng)
        rate = self.sweep(theta, latent, self.inner_steps if n_steps is None else n_steps, rng)
        return latent, rate

    def score_draws(self, theta, K, rng) -> np.ndarray:
        """Complete-data posterior scores for ``K`` fresh latent draws, shape (K, 2)."""
        latent, _ = self.latent_draws(theta, K, rng)
        return self.path_scores(theta, latent) + self.grad_log_prior(theta)


def read_observations(path) -> tuple[np.ndarray, np.ndarray]:
    """Read ``time, X1, X2`` rows (comma or whitespace separated, optional header)."""
    text = Path(path).read_text().splitlines()
    rows = []
    for line in text:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            if rows:
                raise InvalidArgumentError(f"{path}: non-numeric row {line!r}")
            continue  # header
    arr = np.array(rows)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InvalidArgumentError(f"{path}: expected three columns (time, X1, X2)")
    return arr[:, 0], arr[:, 1:]


def write_observations(path, times, states) -> None:
    arr = np.column_stack([np.asarray(times, dtype=float), np.asarray(states, dtype=float)])
    np.savetxt(path, arr, delimiter=",", header="time,X1,X2", comments="", fmt="%.17g")
