"""Command-line entry point.

Exit codes: 0 on success, 1 on a configuration or usage error, 2 when a
checking subcommand (``conc-check``, ``oracle-check``) finds a failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from .. import concentration
from ..errors import ConfigError, FreeObsError
from . import config as cfg
from .engine import bulk_monte_carlo
from .oracle import brute_force_expected_regret
from .stats import _write, emit_bound_curves, emit_csv, emit_sweep_csv, fmt, run_replicated, sweep_epsilon

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK_FAILED = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError("arguments", message)


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed(text):
    value = int(text)
    if not 0 <= value <= cfg.MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="freeobs", description="Bandits with free observations: experiments and checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON experiment config")
        p.add_argument("--seed", type=_seed, default=None, help="override the master seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for replications")

    common(sub.add_parser("run", help="replicated runs; one CSV per variant"))
    p = sub.add_parser("sweep-epsilon", help="final regret as a function of epsilon")
    common(p)
    p.add_argument("--eps", type=_float_list, required=True, help="comma-separated epsilon values")
    common(sub.add_parser("bounds", help="lower and upper bound curves at the checkpoints"))

    p = sub.add_parser("conc-check", help="Monte-Carlo validation of the concentration bounds")
    common(p, config_required=False)
    p.add_argument("--checks", default=",".join(concentration.SUITE_CHECKS),
                   help=f"comma-separated subset of {','.join(concentration.SUITE_CHECKS)}")
    p.add_argument("--delta", type=_float_list, default=[0.2, 0.1, 0.05, 0.01])
    p.add_argument("--T", type=_int_list, default=[100, 1000], dest="horizons")
    p.add_argument("--trials", type=int, default=100_000)

    p = sub.add_parser("oracle-check", help="exact expected regret against Monte Carlo")
    common(p)
    p.add_argument("--runs", type=int, default=1_000_000)
    return parser


def _load(args):
    configs = cfg.load_config(args.config)
    if args.seed is not None:
        configs = [c.with_changes(seed=args.seed) for c in configs]
    if args.jobs < 1:
        raise ConfigError("--jobs", "must be >= 1")
    return configs


def _cmd_run(args) -> int:
    for config in _load(args):
        path = os.path.join(args.out, f"{config.name}.csv")
        emit_csv(run_replicated(config, args.jobs), path)
        print(path)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    for config in _load(args):
        path = os.path.join(args.out, f"{config.name}_sweep.csv")
        emit_sweep_csv(sweep_epsilon(config, args.eps, args.jobs), path)
        print(path)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    for config in _load(args):
        path = os.path.join(args.out, f"{config.name}_bounds.csv")
        emit_bound_curves(config, path)
        print(path)
    return EXIT_OK


def _cmd_conc(args) -> int:
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = set(checks) - set(concentration.SUITE_CHECKS)
    if unknown:
        raise ConfigError("--checks", f"unknown checks {sorted(unknown)}")
    if args.trials < concentration.MIN_TRIALS:
        raise ConfigError("--trials", f"must be >= {concentration.MIN_TRIALS}")
    if any(not 0 < d <= 0.2 for d in args.delta):
        raise ConfigError("--delta", "values must lie in (0, 0.2]")
    if any(T < 2 for T in args.horizons):
        raise ConfigError("--T", "horizons must be >= 2")
    rows = concentration.run_concentration_suite(args.delta, args.horizons, args.trials,
                                                 args.seed or 0, checks)
    cols = concentration.SUITE_COLUMNS
    table = [[r["check"], r["family"], r["T"], fmt(r["delta"]), fmt(r["estimate"]), fmt(r["stderr"]),
              fmt(r["bound"]), "pass" if r["pass"] else "FAIL"] for r in rows]
    path = os.path.join(args.out, "concentration.csv")
    _write(path, cols, table)
    print(path)
    failed = [r for r in rows if not r["pass"]]
    for r in failed:
        print(f"FAIL {r['check']} {r['family']} T={r['T']} delta={r['delta']}", file=sys.stderr)
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def _cmd_oracle(args) -> int:
    rows = []
    ok = True
    for config in _load(args):
        exact = brute_force_expected_regret(config)
        mc = bulk_monte_carlo(config, args.runs, config.seed)
        mean = float(mc.mean())
        se = float(mc.std(ddof=1) / math.sqrt(args.runs)) if args.runs > 1 else math.inf
        passed = bool(abs(mean - exact) <= 3 * se) or math.isclose(mean, exact, rel_tol=0, abs_tol=1e-12)
        ok &= passed
        rows.append([config.name, fmt(exact), fmt(mean), fmt(se), "pass" if passed else "FAIL"])
    path = os.path.join(args.out, "oracle.csv")
    _write(path, ("name", "exact", "mc_mean", "stderr", "pass"), rows)
    print(path)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


COMMANDS = {"run": _cmd_run, "sweep-epsilon": _cmd_sweep, "bounds": _cmd_bounds,
            "conc-check": _cmd_conc, "oracle-check": _cmd_oracle}


def cli_main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FreeObsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(cli_main())
