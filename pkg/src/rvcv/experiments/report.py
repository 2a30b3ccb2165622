"""Experiment reports: one CSV table plus a JSON summary."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["ExperimentReport", "ROW_FIELDS"]

ROW_FIELDS = [
    "experiment", "I", "K", "degree", "target",
    "mu_plain", "mu_controlled", "se_plain", "se_controlled",
    "std_plain", "std_controlled", "std_controlled_se", "std_between_plain", "std_between_controlled",
    "R", "rho", "sqrt_IK_std", "runtime_s", "flag",
]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


@dataclass
class ExperimentReport:
    """Rows keyed by ``(I, K, degree, target)`` plus experiment-level extras.

    ``runtime_s`` and ``timings`` are wall-clock measurements and are the
    only fields that vary between otherwise identical runs.
    """

    experiment: str
    rows: list
    config: dict
    rho_fit: dict | None = None
    extra: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    paths: dict = field(default_factory=dict)
    chains: list | None = field(default=None, repr=False)

    def row(self, I=None, K=None, degree=None, target=0) -> dict:
        hits = [r for r in self.rows
                if (I is None or r["I"] == I) and (K is None or r["K"] == K)
                and (degree is None or r["degree"] == degree) and r["target"] == target]
        if len(hits) != 1:
            raise KeyError(f"expected one row for I={I}, K={K}, degree={degree}, target={target}; found {len(hits)}")
        return hits[0]

    def column(self, name, **where) -> np.ndarray:
        return np.array([r[name] for r in self.rows if all(r[k] == v for k, v in where.items())])

    def deterministic_view(self) -> dict:
        rows = [{k: v for k, v in r.items() if k != "runtime_s"} for r in self.rows]
        return _jsonable({"rows": rows, "rho_fit": self.rho_fit, "extra": self.extra})

    def summary(self) -> dict:
        return _jsonable({
            "experiment": self.experiment,
            "config": self.config,
            "n_rows": len(self.rows),
            "rho_fit": self.rho_fit,
            "extra": self.extra,
            "timings": self.timings,
        })

    def write(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        table = out / f"{self.experiment}_report.csv"
        with open(table, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=ROW_FIELDS)
            w.writeheader()
            for r in self.rows:
                w.writerow({k: (repr(float(r[k])) if isinstance(r[k], (float, np.floating)) else r[k])
                            for k in ROW_FIELDS})
        summary = out / f"{self.experiment}_summary.json"
        summary.write_text(json.dumps(self.summary(), indent=2) + "\n")
        return {"table": str(table), "summary": str(summary)}
