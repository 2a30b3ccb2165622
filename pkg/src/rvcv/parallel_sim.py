"""Deterministic parallel execution of forward simulations.

Every job draws randomness from its own Philox stream.  The Philox key is
derived from the master seed and the counter's two high words hold the
(replicate, iterate) pair, so streams for distinct pairs are disjoint by
construction and a job's output depends only on ``(master_seed, i, k)``.
Results are gathered by replicate index, so the worker count never changes
what a caller sees.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import InvalidArgumentError, SimulationError

__all__ = ["SimJob", "stream", "derive_key", "run_parallel", "SimPool", "default_workers",
           "OUTER_STREAM", "PSEUDO_STREAM"]

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
# Reserved iterate/replicate indices for streams that are not score simulations.
OUTER_STREAM = 1 << 63
PSEUDO_STREAM = (1 << 63) + 1


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def derive_key(master_seed: int) -> np.ndarray:
    """128-bit Philox key for a master seed (any non-negative int)."""
    master_seed = int(master_seed)
    if master_seed < 0:
        raise InvalidArgumentError("master seed must be non-negative")
    words = np.random.SeedSequence(master_seed).generate_state(2, dtype=np.uint64)
    return words


def stream(master_seed: int, iterate: int, replicate: int) -> np.random.Generator:
    """Random generator for job ``(iterate, replicate)`` under ``master_seed``."""
    if not (0 <= iterate <= _MASK64 and 0 <= replicate <= _MASK64):
        raise InvalidArgumentError("iterate and replicate must fit in 64 bits")
    counter = np.array([0, 0, replicate, iterate], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=derive_key(master_seed)))


@dataclass(frozen=True)
class SimJob:
    """One unit of simulation work.

    ``fn`` is called as ``fn(rng, *args)`` with the job's own generator.
    """

    iterate: int
    replicate: int
    master_seed: int
    fn: Callable[..., Any]
    args: tuple = field(default=())

    def rng(self) -> np.random.Generator:
        return stream(self.master_seed, self.iterate, self.replicate)

    def run(self):
        return self.fn(self.rng(), *self.args)


def _run_with_retry(job: SimJob):
    try:
        return job.run()
    except Exception as first:  # noqa: BLE001 - retried once, then surfaced
        log.warning("job (%d, %d) failed: %r; retrying", job.iterate, job.replicate, first)
        try:
            return job.run()
        except Exception as second:
            raise SimulationError(
                f"simulation job (iterate={job.iterate}, replicate={job.replicate}) failed twice: {second!r}"
            ) from second


class SimPool:
    """Reusable thread pool; jobs that spend their time in numba/numpy release the GIL."""

    def __init__(self, workers: int | None = None):
        workers = default_workers() if workers is None else int(workers)
        if workers < 1:
            raise InvalidArgumentError("worker count must be at least 1")
        self.workers = workers
        self._executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def run(self, tasks) -> list:
        tasks = list(tasks)
        if not tasks:
            return []
        if self._executor is None or len(tasks) == 1:
            return [_run_with_retry(t) for t in tasks]
        # static round-robin chunks; order of results fixed by task index
        chunks = [tasks[w::self.workers] for w in range(self.workers)]
        futures = [self._executor.submit(lambda ch=ch: [_run_with_retry(t) for t in ch]) for ch in chunks]
        out = [None] * len(tasks)
        for w, fut in enumerate(futures):
            for j, res in enumerate(fut.result()):
                out[w + j * self.workers] = res
        return out

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def run_parallel(tasks, worker_count: int = 1, pool: SimPool | None = None) -> list:
    """Run jobs on up to ``worker_count`` threads; results come back in task order."""
    if pool is not None:
        return pool.run(tasks)
    with SimPool(worker_count) as p:
        return p.run(tasks)
