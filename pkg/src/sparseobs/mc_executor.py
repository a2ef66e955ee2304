"""Deterministic data-parallel execution of (observation x particle) work.

Particles of one observation are cut into fixed-size blocks that never depend
on the worker count. Each block is handed to a work function together with
its stream addresses; blocks may run on any thread in any order. Results are
reassembled in particle order and reduced with a fixed pairwise tree, so the
output is bit-identical for every worker count.

This is the only module that starts threads. The numba kernels release the
GIL, so a thread pool gives real parallelism.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .rng import StreamKey, split_seed

BLOCK_SIZE = 4096
WORKERS_ENV = "SPARSEOBS_WORKERS"


class AllParticlesFailedError(RuntimeError):
    """Every particle of an observation failed (e.g. hit max_steps)."""


@dataclass(frozen=True)
class StreamBatch:
    """A contiguous range of particles of one observation."""

    seed: int
    obs_index: int
    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start

    @property
    def particle_indices(self) -> np.ndarray:
        return np.arange(self.start, self.stop, dtype=np.int64)

    @property
    def key_words(self) -> tuple[int, int]:
        return split_seed(self.seed)

    def keys(self) -> list[StreamKey]:
        return [StreamKey(self.seed, self.obs_index, i) for i in range(self.start, self.stop)]


@dataclass(frozen=True)
class ParticleEstimate:
    mean: float
    std_error: float
    n_particles: int
    n_failed: int = 0


def resolve_workers(workers: int | None) -> int:
    """Explicit count, else $SPARSEOBS_WORKERS, else 1. ``0`` means all cores."""
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise ValueError("worker count must be positive (or 0 for all cores)")
    return workers


def pairwise_sum(values) -> float:
    """Sum by repeatedly adding adjacent pairs; an odd tail element is carried."""
    a = np.asarray(values, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    while a.size > 1:
        if a.size % 2:
            a = np.concatenate([a[:-1:2] + a[1::2], a[-1:]])
        else:
            a = a[0::2] + a[1::2]
    return float(a[0])


def reduce_estimate(values, n_particles: int | None = None) -> ParticleEstimate:
    """Mean and standard error of per-particle values; NaN marks a failed particle."""
    values = np.asarray(values, dtype=float).ravel()
    n_particles = values.size if n_particles is None else n_particles
    ok = values[np.isfinite(values)]
    n_failed = n_particles - ok.size
    n = ok.size
    if n == 0:
        raise AllParticlesFailedError(f"all {n_particles} particles failed")
    lo, hi = ok.min(), ok.max()
    if lo == hi:
        return ParticleEstimate(float(lo), 0.0, n_particles, n_failed)
    # the clip only removes last-bit rounding; the true mean lies in [lo, hi]
    mean = min(max(pairwise_sum(ok) / n, lo), hi)
    if n < 2:
        return ParticleEstimate(float(mean), float("nan"), n_particles, n_failed)
    var = pairwise_sum((ok - mean) ** 2) / (n - 1)
    return ParticleEstimate(float(mean), float(np.sqrt(var / n)), n_particles, n_failed)


def map_blocks(
    work: Callable[[StreamBatch], np.ndarray],
    n_obs: int,
    n_particles: int,
    seed: int,
    workers: int | None = None,
    obs_indices=None,
) -> list[np.ndarray]:
    """Run ``work`` over all blocks and return per-observation value arrays.

    ``work(batch)`` returns an array whose first axis has ``len(batch)``
    entries. ``obs_indices`` restricts the run to a subset of observations
    (stream addresses still use the global index).
    """
    if n_obs < 1:
        raise ValueError("need at least one observation")
    if n_particles < 2:
        raise ValueError("need at least two particles per observation")
    obs_indices = list(range(n_obs)) if obs_indices is None else list(obs_indices)
    batches = [
        StreamBatch(int(seed), j, start, min(start + BLOCK_SIZE, n_particles))
        for j in obs_indices
        for start in range(0, n_particles, BLOCK_SIZE)
    ]
    workers = resolve_workers(workers)

    def run(batch):
        out = np.asarray(work(batch))
        if out.shape[:1] != (len(batch),):
            raise ValueError(f"work returned shape {out.shape} for a batch of {len(batch)}")
        return out

    if workers == 1 or len(batches) == 1:
        results = [run(b) for b in batches]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, batches))

    per_obs = {j: [] for j in obs_indices}
    for batch, res in zip(batches, results):
        per_obs[batch.obs_index].append(res)
    return [np.concatenate(per_obs[j]) for j in obs_indices]


def map_reduce(
    work: Callable[[StreamBatch], np.ndarray],
    n_obs: int,
    n_particles: int,
    seed: int,
    workers: int | None = None,
) -> list[ParticleEstimate]:
    """One :class:`ParticleEstimate` per observation from per-particle values."""
    return [
        reduce_estimate(values, n_particles)
        for values in map_blocks(work, n_obs, n_particles, seed, workers)
    ]
