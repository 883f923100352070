"""Running experiments: one stage loop shared by single runs, replicated
batches and bulk Monte Carlo.

All replications of a batch advance in lockstep as rows of arrays.  Every
operation is row-local, so a replication's trace depends only on its own
random stream, never on which other replications share its batch.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..core import U_ARRIVAL, U_FREE, U_PASSIVE, U_PULL, U_TIE_FREE, U_TIE_PULL, Z_FREE, Z_PULL, StageTape
from ..environments import ACTIVE, NONE, ObservationCounters, passive_draw_from_uniform
from .config import ExperimentConfig


@dataclass(frozen=True)
class RegretTrace:
    """Pseudo-regret of one run at its checkpoint stages, with final counts."""

    stages: np.ndarray
    regret: np.ndarray
    pulls: np.ndarray
    free: np.ndarray

    def __post_init__(self):
        if len(self.stages) != len(self.regret):
            raise ValueError("one regret value per checkpoint")


@dataclass(frozen=True)
class BatchResult:
    """Rows of several runs: ``regret`` is ``(runs, checkpoints)``, ``pulls``
    and ``free`` are ``(runs, K)`` final counts."""

    stages: np.ndarray
    regret: np.ndarray
    pulls: np.ndarray
    free: np.ndarray

    def trace(self, row: int) -> RegretTrace:
        return RegretTrace(self.stages, self.regret[row], self.pulls[row], self.free[row])

    @property
    def final(self) -> np.ndarray:
        return self.regret[:, -1]


def regret_of_counts(gaps, pulls: np.ndarray) -> np.ndarray:
    """``sum_i gap_i N_i`` per row, accumulated arm by arm so each row's value
    is computed the same way whatever the batch shape."""
    total = np.zeros(pulls.shape[0])
    for i, g in enumerate(gaps):
        total += g * pulls[:, i]
    return total


def simulate(config: ExperimentConfig, tape: StageTape, checkpoints=None) -> BatchResult:
    """Run ``tape.n_rows`` independent runs of ``config`` up to the last
    checkpoint (default: the configured ones)."""
    inst = config.instance
    K = inst.n_arms
    R = tape.n_rows
    stages = np.asarray(config.checkpoints if checkpoints is None else checkpoints, dtype=np.int64)
    horizon = int(stages[-1]) if stages.size else 0
    loc, scale, bern = inst.sampling_parameters()
    gaps = np.asarray(inst.gaps)
    schedule = config.schedule
    active = config.observer.kind == ACTIVE
    cumulative = None if active else np.cumsum(config.observer.p)

    policy = config.policy.build()
    policy.reset(K, R)
    counters = ObservationCounters(K, R)
    regret = np.zeros((R, stages.size))
    next_cp = 0
    for t in range(1, horizon + 1):
        u, z = tape.stage(t)
        decision = policy.step(t, counters, u[:, U_TIE_PULL], u[:, U_TIE_FREE])
        pull = decision.pull
        r_pull = loc[pull] + scale[pull] * z[:, Z_PULL] + (u[:, U_PULL] < bern[pull])
        counters.record_pull(pull, r_pull)

        free_arms = free_rewards = mask = None
        if schedule.kind != NONE:
            avail = schedule.available(t, u[:, U_ARRIVAL])
            if avail.any():
                if active:
                    free_arms = decision.free_request
                else:
                    free_arms = passive_draw_from_uniform(cumulative, u[:, U_PASSIVE])
                free_rewards = loc[free_arms] + scale[free_arms] * z[:, Z_FREE] + (u[:, U_FREE] < bern[free_arms])
                mask = avail
                counters.record_free(free_arms, free_rewards, mask)
        policy.observe(t, pull, r_pull, free_arms, free_rewards, mask)

        if t == stages[next_cp]:
            regret[:, next_cp] = regret_of_counts(gaps, counters.N)
            next_cp += 1
    return BatchResult(stages, regret, counters.N.copy(), counters.F.copy())


def run_batch(config: ExperimentConfig, indices) -> BatchResult:
    """Replications ``indices`` of ``config``, each on its own stream."""
    return simulate(config, StageTape.for_replications(config.seed, list(indices)))


def run_single(config: ExperimentConfig, replication_index: int = 0) -> RegretTrace:
    return run_batch(config, [replication_index]).trace(0)


def _run_chunk(args):
    config, indices = args
    return run_batch(config, indices)


def run_all(config: ExperimentConfig, jobs: int = 1) -> BatchResult:
    """Every replication of ``config``, in replication-index order.

    With ``jobs > 1`` the replications are split into contiguous chunks run in
    worker processes; results are concatenated by index.
    """
    indices = np.arange(config.replications)
    if jobs <= 1 or config.replications == 1:
        return run_batch(config, indices)
    chunks = [c for c in np.array_split(indices, min(jobs, config.replications)) if c.size]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_chunk, [(config, c) for c in chunks]))
    return BatchResult(parts[0].stages,
                       np.concatenate([p.regret for p in parts]),
                       np.concatenate([p.pulls for p in parts]),
                       np.concatenate([p.free for p in parts]))


def bulk_monte_carlo(config: ExperimentConfig, n_runs: int, seed: int, horizon: int = None,
                     chunk: int = 200_000) -> np.ndarray:
    """Final pseudo-regret of ``n_runs`` runs drawn from one shared generator
    (no per-replication identity; meant for large Monte-Carlo checks)."""
    horizon = config.horizon if horizon is None else horizon
    if horizon == 0:
        return np.zeros(n_runs)
    gen = np.random.Generator(np.random.PCG64(seed))
    out = []
    done = 0
    while done < n_runs:
        n = min(chunk, n_runs - done)
        tape = StageTape.bulk(gen, n, block=horizon)
        out.append(simulate(config, tape, [horizon]).final)
        done += n
    return np.concatenate(out)
