"""Experiment orchestration: configs, replicated runs, aggregation, CSV
output, the exact oracle and the command line."""

from .config import ExperimentConfig, PolicySpec, load_config, parse_config
from .engine import BatchResult, RegretTrace, bulk_monte_carlo, run_all, run_batch, run_single, simulate
from .oracle import brute_force_expected_regret
from .stats import (AggregateStats, aggregate, emit_bound_curves, emit_csv, run_replicated,
                    sweep_epsilon)

__all__ = [
    "AggregateStats", "BatchResult", "ExperimentConfig", "PolicySpec", "RegretTrace", "aggregate",
    "brute_force_expected_regret", "bulk_monte_carlo", "emit_bound_curves", "emit_csv", "load_config",
    "parse_config", "run_all", "run_batch", "run_replicated", "run_single", "simulate", "sweep_epsilon",
]
