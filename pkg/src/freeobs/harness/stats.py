"""Aggregation over replications and CSV emission."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass

import numpy as np

from .. import bounds
from ..environments import ACTIVE, NONE, FreeObsSchedule
from ..errors import ConfigError
from .config import ExperimentConfig
from .engine import BatchResult, RegretTrace, run_all

STATS_HEADER = ("t", "mean", "q10", "q25", "q75", "q90")
QUANTILES = (0.10, 0.25, 0.75, 0.90)


@dataclass(frozen=True)
class AggregateStats:
    stages: np.ndarray
    mean: np.ndarray
    q10: np.ndarray
    q25: np.ndarray
    q75: np.ndarray
    q90: np.ndarray
    n_runs: int = 1

    @property
    def final_mean(self) -> float:
        return float(self.mean[-1])


def nearest_rank_quantiles(values: np.ndarray, qs=QUANTILES) -> np.ndarray:
    """Quantiles along axis 0 by nearest rank: the smallest sample value whose
    empirical CDF reaches ``q``."""
    return np.quantile(values, qs, axis=0, method="inverted_cdf")


def aggregate(result: BatchResult) -> AggregateStats:
    q = nearest_rank_quantiles(result.regret)
    return AggregateStats(result.stages, result.regret.mean(axis=0), q[0], q[1], q[2], q[3],
                          result.regret.shape[0])


def fmt(x) -> str:
    return format(float(x), ".10g")


def _write(path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    d = os.path.dirname(os.fspath(path))
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())


def emit_csv(data, path) -> None:
    """Write aggregate stats (or a single trace, whose quantiles all equal its
    value) as ``t,mean,q10,q25,q75,q90``."""
    if isinstance(data, RegretTrace):
        r = data.regret
        data = AggregateStats(data.stages, r, r, r, r, r)
    rows = [[int(t)] + [fmt(v) for v in vals]
            for t, *vals in zip(data.stages, data.mean, data.q10, data.q25, data.q75, data.q90)]
    _write(path, STATS_HEADER, rows)


def read_stats_csv(path) -> AggregateStats:
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != STATS_HEADER:
            raise ValueError(f"unexpected header {header}")
        rows = [list(map(float, r)) for r in reader]
    arr = np.array(rows)
    return AggregateStats(arr[:, 0].astype(np.int64), *[arr[:, j] for j in range(1, 6)], n_runs=0)


def bound_inputs(config: ExperimentConfig):
    """``(gaps, eps, p)`` for the bound calculators; uniform ``p`` when the
    observer is active."""
    gaps = np.asarray(config.instance.gaps)
    eps = 0.0 if config.schedule.kind == NONE else config.schedule.epsilon
    K = gaps.size
    p = np.full(K, 1.0 / K) if config.observer.kind == ACTIVE else np.asarray(config.observer.p)
    return gaps, eps, p


def emit_bound_curves(config: ExperimentConfig, path, stages=None) -> dict:
    """Write every bound curve at the checkpoint stages (those >= 3)."""
    gaps, eps, p = bound_inputs(config)
    stages = [t for t in (config.checkpoints if stages is None else stages) if t >= 3]
    table = bounds.bound_table(stages, gaps, eps, p)
    cols = list(table)
    _write(path, cols, [[int(table["T"][i])] + [fmt(table[c][i]) for c in cols[1:]]
                        for i in range(len(stages))])
    return table


def read_table_csv(path) -> dict:
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [list(map(float, r)) for r in reader]
    arr = np.array(rows)
    return {h: arr[:, j] for j, h in enumerate(header)}


def run_replicated(config: ExperimentConfig, jobs: int = 1) -> AggregateStats:
    return aggregate(run_all(config, jobs))


def sweep_epsilon(config: ExperimentConfig, eps_list, jobs: int = 1) -> list[tuple[float, AggregateStats]]:
    """Replicated runs of ``config`` with the arrival rate replaced by each
    value of ``eps_list`` (schedule kind kept)."""
    if config.schedule.kind == NONE:
        raise ConfigError("schedule.kind", "an epsilon sweep needs a deterministic or static_random schedule")
    out = []
    for eps in eps_list:
        if not 0.0 < eps <= 1.0:
            raise ConfigError("--eps", f"epsilon must lie in (0, 1], got {eps}")
        cfg = config.with_changes(schedule=FreeObsSchedule(config.schedule.kind, float(eps)))
        out.append((float(eps), run_replicated(cfg, jobs)))
    return out


SWEEP_HEADER = ("epsilon",) + STATS_HEADER[1:]


def emit_sweep_csv(rows, path) -> None:
    _write(path, SWEEP_HEADER, [[fmt(eps), fmt(s.mean[-1]), fmt(s.q10[-1]), fmt(s.q25[-1]),
                                 fmt(s.q75[-1]), fmt(s.q90[-1])] for eps, s in rows])
