"""Experiment configuration: a flat JSON document validated into :class:`ExperimentConfig`.

Schema (all keys optional except ``experiment``)::

    experiment      exponential | ising | ergm | sir | rho-curve | k-allocation
    seed            master seed (int >= 0)
    I               recorded iterations, int or list (prefixes of one chain)
    K               simulations per iterate, int or list (nested subsets)
    degrees         polynomial degrees, list of 1..3
    replicates      independent chains; std[mu] is taken across them
    burn_in         discarded outer iterations
    proposal_sd     random-walk scale, float or list
    proposal_cov    full random-walk covariance (d x d), overrides proposal_sd
    initial_theta   list; defaults per model
    n_chains        simulation jobs per iterate (fixes the random streams)
    reuse_exchange_draw   bool
    batches         batch count for batch-means standard errors
    K0              list of core counts (k-allocation)
    budget          serial cost c (k-allocation)
    model           dict of model settings, see EXAMPLES
    out             output directory

``EXAMPLES`` holds a complete, runnable document for every experiment.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError

__all__ = ["ExperimentConfig", "EXPERIMENTS", "EXAMPLES", "load_config", "config_from_dict"]

EXPERIMENTS = ("exponential", "ising", "ergm", "sir", "rho-curve", "k-allocation")

EXAMPLES = {
    "exponential": {
        "experiment": "exponential",
        "seed": 1,
        "I": [100, 1000, 10000],
        "K": [1, 10, 100],
        "degrees": [2],
        "replicates": 20,
        "burn_in": 500,
        "proposal_sd": 0.8,
        "model": {"y": 2.0},
    },
    "rho-curve": {
        "experiment": "rho-curve",
        "seed": 2,
        "I": 10000,
        "K": [1, 2, 5, 10, 20, 50, 100],
        "degrees": [2],
        "replicates": 10,
        "burn_in": 500,
        "proposal_sd": 0.8,
        "model": {"y": 2.0},
    },
    "k-allocation": {
        "experiment": "k-allocation",
        "seed": 2,
        "I": 10000,
        "K": [1, 2, 5, 10, 20, 50, 100],
        "degrees": [2],
        "replicates": 10,
        "burn_in": 500,
        "proposal_sd": 0.8,
        "K0": [1, 2, 4, 8],
        "budget": 1000.0,
        "model": {"y": 2.0},
    },
    "ising": {
        "experiment": "ising",
        "seed": 3,
        "I": 10000,
        "K": [1, 20, 100, 500],
        "degrees": [1, 2],
        "replicates": 1,
        "burn_in": 1000,
        "proposal_sd": 0.06,
        "model": {
            "rows": 16,
            "cols": 16,
            "theta_true": 0.4,
            "prior_sd": 5.0,
            "data_seed": 11,
            "data": None,
            "burn_in_sweeps": 500,
            "lag_sweeps": 5,
            "init": "data",
            "sampler": "gibbs",
            "double_count": False,
            "oracle_points": 201,
        },
    },
    "ergm": {
        "experiment": "ergm",
        "seed": 4,
        "I": 10000,
        "K": [1, 20, 100, 500],
        "degrees": [1, 2],
        "replicates": 1,
        "burn_in": 1000,
        "proposal_sd": [1.4, 0.17],
        "proposal_cov": [[2.0, -0.23], [-0.23, 0.028]],
        "initial_theta": [-1.0, 0.0],
        "model": {"data": "bundled", "n": 16, "prior_sd": 5.0, "burn_in": 1000, "lag": 1000, "init": "data"},
    },
    "sir": {
        "experiment": "sir",
        "seed": 5,
        "I": 1000,
        "K": [1, 10, 100],
        "degrees": [1],
        "replicates": 1,
        "burn_in": 200,
        "proposal_sd": [0.02, 0.01],
        "model": {
            "theta_true": [0.5, 0.25],
            "N": 1000,
            "X0": [0.99, 0.01],
            "t_end": 35.0,
            "n_obs": 10,
            "n_latent_per_gap": 5,
            "sim_dt": 0.01,
            "data_seed": 12,
            "data": None,
            "inner_steps": 50,
            "outer_sweeps": 1,
            "prior_shape": 2.0,
            "prior_scale": 2.0,
        },
    },
}

_KNOWN = {
    "experiment", "seed", "I", "K", "degrees", "replicates", "burn_in", "proposal_sd", "proposal_cov", "initial_theta",
    "n_chains", "reuse_exchange_draw", "batches", "K0", "budget", "model", "out", "workers",
}


def _int_list(value, name):
    vals = [value] if np.isscalar(value) else list(value)
    if not vals:
        raise ConfigError(f"{name} must not be empty")
    out = []
    for v in vals:
        if isinstance(v, bool) or int(v) != v or int(v) < 1:
            raise ConfigError(f"{name} entries must be positive integers, got {v!r}")
        out.append(int(v))
    return sorted(set(out))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = 0
    I: tuple = (1000,)
    K: tuple = (1,)
    degrees: tuple = (2,)
    replicates: int = 1
    burn_in: int = 500
    proposal_sd: tuple = (0.5,)
    proposal_cov: tuple | None = None
    initial_theta: tuple | None = None
    n_chains: int = 1
    reuse_exchange_draw: bool = False
    batches: int | None = None
    K0: tuple = (1, 2, 4, 8)
    budget: float = 1000.0
    model: dict = field(default_factory=dict)
    out: str | None = None
    workers: int | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        object.__setattr__(self, "I", tuple(_int_list(self.I, "I")))
        object.__setattr__(self, "K", tuple(_int_list(self.K, "K")))
        object.__setattr__(self, "K0", tuple(_int_list(self.K0, "K0")))
        degs = tuple(_int_list(self.degrees, "degrees"))
        if any(d > 3 for d in degs):
            raise ConfigError("degrees must be 1, 2 or 3")
        object.__setattr__(self, "degrees", degs)
        for name in ("replicates", "n_chains"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if int(self.burn_in) != self.burn_in or self.burn_in < 0:
            raise ConfigError("burn_in must be a non-negative integer")
        sd = np.atleast_1d(np.asarray(self.proposal_sd, dtype=float))
        if np.any(sd <= 0) or not np.all(np.isfinite(sd)):
            raise ConfigError("proposal_sd must be positive")
        object.__setattr__(self, "proposal_sd", tuple(float(v) for v in sd))
        if self.proposal_cov is not None:
            cov = np.atleast_2d(np.asarray(self.proposal_cov, dtype=float))
            if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
                raise ConfigError("proposal_cov must be a square matrix")
            object.__setattr__(self, "proposal_cov", tuple(tuple(float(v) for v in r) for r in cov))
        if self.initial_theta is not None:
            object.__setattr__(self, "initial_theta", tuple(float(v) for v in np.atleast_1d(self.initial_theta)))
        if not self.budget > 0:
            raise ConfigError("budget must be positive")
        if self.batches is not None and (int(self.batches) != self.batches or self.batches < 2):
            raise ConfigError("batches must be an integer >= 2")
        if self.workers is not None and (int(self.workers) != self.workers or self.workers < 1):
            raise ConfigError("workers must be a positive integer")
        if not isinstance(self.model, dict):
            raise ConfigError("model must be a mapping")
        if self.experiment in ("rho-curve", "k-allocation") and len(self.K) < 2:
            raise ConfigError("a rho curve needs at least two K values")

    @property
    def model_settings(self) -> dict:
        """Model settings with defaults from the example of the same experiment."""
        base = copy.deepcopy(EXAMPLES[self.experiment].get("model", {}))
        unknown = set(self.model) - set(base)
        if unknown:
            raise ConfigError(f"unknown model keys for {self.experiment}: {sorted(unknown)}")
        base.update(self.model)
        return base

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        d["model"] = self.model_settings
        return d


def config_from_dict(doc: dict, **overrides) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    doc = {**doc, **{k: v for k, v in overrides.items() if v is not None}}
    unknown = set(doc) - _KNOWN
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    if "experiment" not in doc:
        raise ConfigError("configuration needs an 'experiment' key")
    try:
        return ExperimentConfig(**doc)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(doc, **overrides)
