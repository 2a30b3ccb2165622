"""Exponential likelihood viewed as a one-parameter Gibbs random field.

``p(y | theta) = theta exp(-theta y)`` has statistic ``s(y) = -y`` and
normaliser ``1/theta``.  With a flat prior on ``theta > 0`` the posterior is
Gamma(2, rate=y), so every quantity the control-variate machinery touches
has a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError

__all__ = ["ExponentialModel", "exp_score", "exp_posterior_mean", "exp_posterior_density"]


def _positive(**kw):
    for name, v in kw.items():
        arr = np.asarray(v, dtype=float)
        if not np.all(arr > 0):
            raise InvalidArgumentError(f"{name} must be positive")


def exp_score(theta, y):
    """Exact posterior score ``-y + 1/theta``."""
    _positive(theta=theta, y=y)
    return -np.asarray(y, dtype=float) + 1.0 / np.asarray(theta, dtype=float)


def exp_posterior_mean(y) -> float:
    _positive(y=y)
    return 2.0 / float(y)


def exp_posterior_density(theta, y):
    """``y^2 theta exp(-theta y)``."""
    _positive(theta=theta, y=y)
    theta = np.asarray(theta, dtype=float)
    return y**2 * theta * np.exp(-theta * y)


@dataclass(frozen=True)
class ExponentialModel:
    y: float = 2.0
    name: str = "exponential"

    def __post_init__(self):
        _positive(y=self.y)

    dim = 1

    @property
    def s_obs(self) -> np.ndarray:
        return np.array([-float(self.y)])

    def suff_stat(self, y) -> np.ndarray:
        return np.array([-float(y)])

    def log_prior(self, theta) -> float:
        t = float(np.asarray(theta).ravel()[0])
        return 0.0 if t > 0 else -np.inf

    def grad_log_prior(self, theta) -> np.ndarray:
        return np.zeros_like(np.atleast_1d(np.asarray(theta, dtype=float)))

    def simulate_stats(self, theta, n, rng) -> np.ndarray:
        t = float(np.asarray(theta).ravel()[0])
        _positive(theta=t)
        return -rng.exponential(1.0 / t, size=(int(n), 1))

    def forward_sim(self, theta, seed=None, rng=None) -> float:
        rng = np.random.default_rng(seed) if rng is None else rng
        return float(-self.simulate_stats(theta, 1, rng)[0, 0])

    def exact_log_partition(self, theta) -> float:
        t = float(np.asarray(theta).ravel()[0])
        _positive(theta=t)
        return -np.log(t)

    def exact_score(self, theta) -> np.ndarray:
        return np.atleast_1d(exp_score(theta, self.y))
