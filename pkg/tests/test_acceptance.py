"""End-to-end acceptance criteria, each at its stated scale and tolerance.

Every test records one PASS/FAIL line, printed in the session summary.
Criteria that do not hold at desk scale are strict xfails; the reasons are
recorded in the decisions ledger.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from freeobs import bounds
from freeobs.concentration import run_concentration_suite
from freeobs.harness import cli
from freeobs.harness.config import load_config
from freeobs.harness.engine import bulk_monte_carlo, run_all
from freeobs.harness.oracle import brute_force_expected_regret

from conftest import FIVE_ARM_GAPS, FOUR_ARM_GAPS, record_criterion

pytestmark = pytest.mark.slow

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")
# calibrated once: the observed plateau times eps * gap is about 0.92
BOUNDED_REGRET_CONSTANT = 20.0


def _load(name):
    return {c.name: c for c in load_config(os.path.join(CONFIGS, name))}


def _elapsed(start):
    return f"{time.perf_counter() - start:.1f}s"


def test_1_bounded_regret_plateau():
    start = time.perf_counter()
    (config,) = _load("bounded_regret.json").values()
    config = config.with_changes(checkpoints=(50_000, 100_000))
    res = run_all(config)
    mid, end = res.regret.mean(axis=0)
    eps, gap = config.schedule.epsilon, float(config.instance.gaps[1])
    limit = BOUNDED_REGRET_CONSTANT / (eps * gap)
    growth = (end - mid) / mid
    elapsed = time.perf_counter() - start
    ok = growth < 0.02 and end <= limit and elapsed < 120
    record_criterion("1 bounded regret", ok, f"mean(5e4)={mid:.2f} mean(1e5)={end:.2f} growth={growth:.2%} "
                     f"limit={limit:.0f} time={elapsed:.1f}s")
    assert ok


def test_2_ucb_passive_below_upper_bounds():
    start = time.perf_counter()
    (config,) = _load("passive_four_arms.json").values()
    res = run_all(config)
    mean = res.regret.mean(axis=0)
    ub = bounds.ub_ucb_passive(FOUR_ARM_GAPS, 0.1, np.full(4, 0.25))
    limit = ub.at(res.stages)
    positive = limit > 0
    worst = float(np.max(mean[positive] / limit[positive]))
    elapsed = time.perf_counter() - start
    ok = bool(np.all(mean <= limit)) and elapsed < 180
    record_criterion("2 upper-bound domination", ok, f"final mean={mean[-1]:.1f} "
                     f"min bound={min(ub.log_coefficient * math.log(1e4), ub.finite):.1f} "
                     f"max ratio={worst:.3f} time={elapsed:.1f}s")
    assert ok


@pytest.fixture(scope="module")
def epsilon_sweep():
    (config,) = _load("passive_four_arms.json").values()
    out = {}
    for eps in (0.1, 0.01, 0.001):
        cfg = config.with_changes(schedule=config.schedule.__class__(config.schedule.kind, eps))
        out[eps] = float(run_all(cfg).final.mean())
    return out


def test_3a_regret_increases_as_epsilon_decreases(epsilon_sweep):
    r = [epsilon_sweep[e] for e in (0.1, 0.01, 0.001)]
    ok = r[0] < r[1] < r[2]
    record_criterion("3a epsilon ordering", ok, " ".join(f"eps={e}: {v:.1f}" for e, v in epsilon_sweep.items()))
    assert ok


@pytest.mark.xfail(strict=True, reason="at T=1e4, eps=1e-3 yields only 10 free observations and the "
                                       "curve saturates toward the no-information regret; see ledger")
def test_3b_decade_increments_agree(epsilon_sweep):
    r = [epsilon_sweep[e] for e in (0.1, 0.01, 0.001)]
    inc = (r[1] - r[0], r[2] - r[1])
    ok = abs(inc[0] - inc[1]) <= 0.4 * max(inc)
    record_criterion("3b log(1/eps) linearity", ok, f"increments {inc[0]:.1f} and {inc[1]:.1f} "
                     "(expected failure, saturation near eps ~ 1/T)")
    assert ok


@pytest.fixture(scope="module")
def distribution_finals():
    return {name: run_all(c).final for name, c in _load("passive_distributions.json").items()}


def _one_sided_p(a, b):
    """Welch statistic for mean(a) < mean(b), normal approximation."""
    se = math.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
    z = (b.mean() - a.mean()) / se
    return 0.5 * math.erfc(z / math.sqrt(2)), se


def test_4_optimal_distribution_beats_uniform(distribution_finals):
    opt, uni = distribution_finals["optimal"], distribution_finals["uniform"]
    p_value, se = _one_sided_p(opt, uni)
    pooled = math.sqrt((opt.var(ddof=1) + uni.var(ddof=1)) / 2) * math.sqrt(1 / opt.size + 1 / uni.size)
    ok = opt.mean() <= uni.mean() and (p_value < 0.05 or uni.mean() - opt.mean() >= pooled)
    record_criterion("4 distribution ordering", ok, f"optimal={opt.mean():.2f} uniform={uni.mean():.2f} "
                     f"suboptimal={distribution_finals['suboptimal'].mean():.2f} one-sided p={p_value:.2g}")
    assert ok


@pytest.mark.xfail(strict=True, reason="the 1/gap^2 distribution beats uniform on this instance; "
                                       "see ledger")
def test_4b_uniform_beats_inverse_square(distribution_finals):
    uni, sub = distribution_finals["uniform"], distribution_finals["suboptimal"]
    assert uni.mean() <= sub.mean()


def test_5_active_algorithm():
    start = time.perf_counter()
    configs = _load("active_five_arms.json")
    results = {}
    for name in ("etc_ocucb", "etc_ocucb_all_info"):
        c = configs[name]
        results[name] = run_all(c.with_changes(checkpoints=(7500, 10_000))).regret.mean(axis=0)
    two_track = results["etc_ocucb"]
    share = (two_track[1] - two_track[0]) / two_track[1]
    all_info = results["etc_ocucb_all_info"][1]
    elapsed = time.perf_counter() - start
    ok = share <= 0.05 and all_info <= two_track[1] and elapsed < 300
    record_criterion("5 active algorithm", ok, f"last-quarter share={share:.2%} two-track={two_track[1]:.1f} "
                     f"all-info={all_info:.1f} time={elapsed:.1f}s")
    assert ok


def test_6_concentration_suite():
    start = time.perf_counter()
    rows = run_concentration_suite((0.2, 0.1, 0.05, 0.01), (100, 1000), 100_000, seed=0)
    failed = [r for r in rows if not r["pass"]]
    elapsed = time.perf_counter() - start
    ok = not failed and elapsed < 120
    record_criterion("6 concentration suite", ok, f"{len(rows) - len(failed)}/{len(rows)} checks pass "
                     f"time={elapsed:.1f}s")
    assert ok


def test_7_bound_calculator_properties():
    start = time.perf_counter()
    p = np.full(4, 0.25)
    grid = np.unique(np.logspace(2, 6, 200).astype(int))
    mono = np.array([bounds.lb_passive_monotone(T, FOUR_ARM_GAPS, 0.1, p) for T in grid])
    simple = np.array([bounds.lb_passive_simple(T, FOUR_ARM_GAPS, 0.1, p) for T in grid])
    checks = {"monotone": bool(np.all(np.diff(mono) >= 0)),
              "dominates": bool(np.all(mono >= simple - 1e-9))}
    ws = [(x, bounds.lambert_w(x)) for x in np.concatenate([[-1 / math.e + 1e-6], np.logspace(-6, 12, 300)])]
    checks["lambert identity"] = all(abs(w * math.exp(w) - x) <= 1e-9 * abs(x) for x, w in ws)
    lx = math.log(100.0)
    gap = bounds.lambert_w(100.0) - (lx - math.log(lx))
    checks["lambert sandwich"] = math.log(lx) / (2 * lx) <= gap <= math.e / (math.e - 1) * math.log(lx) / lx
    g = np.sort(FIVE_ARM_GAPS)
    stages = bounds.active_switch_stages(g, 0.1)
    checks["switch stages"] = all(t is not None and t >= sum(1 / (2 * d**2) for d in g[k:]) / 0.1
                                  for k, t in stages.items())
    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 10
    record_criterion("7 bound calculators", ok, " ".join(f"{k}={'ok' if v else 'no'}" for k, v in checks.items())
                     + f" time={elapsed:.1f}s")
    assert ok


def test_8_oracle_equivalence():
    start = time.perf_counter()
    parts = []
    ok = True
    for name, config in _load("oracle_ftl.json").items():
        exact = brute_force_expected_regret(config)
        mc = bulk_monte_carlo(config, 1_000_000, config.seed)
        se = mc.std(ddof=1) / math.sqrt(mc.size)
        good = abs(mc.mean() - exact) <= 3 * se
        ok &= bool(good)
        parts.append(f"{name}: exact={exact:.5f} mc={mc.mean():.5f} se={se:.1e}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 180
    record_criterion("8 oracle equivalence", ok, "; ".join(parts) + f" time={elapsed:.1f}s")
    assert ok


def test_9_determinism_across_jobs(tmp_path):
    with open(os.path.join(CONFIGS, "passive_distributions.json")) as fh:
        obj = json.load(fh)
    obj.update(horizon=2000, replications=40)
    path = tmp_path / "distributions_small.json"
    path.write_text(json.dumps(obj))
    outputs = {}
    for jobs in (1, 8):
        out = tmp_path / f"jobs{jobs}"
        assert cli.cli_main(["run", "--config", str(path), "--out", str(out), "--jobs", str(jobs)]) == 0
        outputs[jobs] = {f: (out / f).read_bytes() for f in sorted(os.listdir(out))}
    ok = outputs[1] == outputs[8] and len(outputs[1]) == 3
    record_criterion("9 determinism", ok, f"{len(outputs[1])} CSVs byte-identical at --jobs 1 and 8: {ok}")
    assert ok
