import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freeobs.core import StageTape, gaussian_instance
from freeobs.environments import FreeObsSchedule, ObservationCounters, ObserverMode
from freeobs.errors import PreconditionError
from freeobs.harness.config import ExperimentConfig, PolicySpec, parse_config
from freeobs.harness.engine import run_batch, run_single, simulate
from freeobs.policies import (EVERY_ROUND, POLICIES, ActiveEtcOcucb, Cadence, EtcEliminator, FtlRobin,
                              Ucb1Double, UcbPassive, argmax_random_tie, epoch_length, etc_ingest,
                              etc_radius, ocucb_index, ocucb_indices, ucb_passive_index)

from conftest import DATA, FIVE_ARM_MEANS, FOUR_ARM_MEANS, config_dict
from golden_cases import CASES


def test_ucb_index(oracle):
    assert ucb_passive_index(0.5, 4, 100) == pytest.approx(oracle["ucb_index_mean05_O4_t100"], abs=1e-12)
    assert ucb_passive_index(0.5, 4, 1) == 0.5
    assert abs(ucb_passive_index(0.5, 10**9, 100) - 0.5) < 1e-3
    with pytest.raises(PreconditionError):
        ucb_passive_index(0.5, 0, 10)
    with pytest.raises(PreconditionError):
        ucb_passive_index(0.5, 1, 0)


def test_argmax_ties_are_uniform():
    values = np.tile([1.0, 3.0, 3.0, 0.0, 3.0], (30000, 1))
    u = np.random.default_rng(1).random(30000)
    freq = np.bincount(argmax_random_tie(values, u), minlength=5) / u.size
    np.testing.assert_allclose(freq, [0, 1 / 3, 1 / 3, 0, 1 / 3], atol=0.01)
    assert argmax_random_tie(np.array([[0.0, 1.0]]), np.array([0.99]))[0] == 1


def test_etc_radius_and_rule(oracle):
    r = etc_radius(100, math.log(1e4), 1.0)
    assert r == pytest.approx(oracle["etc_radius_s100_T1e4"], abs=1e-12)
    assert 0.1 + r < 0.9 - r
    assert etc_radius(10**4, math.log(1e4)) == 0.0
    assert etc_radius(2 * 10**4, math.log(1e4)) == 0.0


def _etc_with_means(means, s, horizon=1e4):
    etc = EtcEliminator(len(means), horizon=horizon, cadence=Cadence(EVERY_ROUND))
    etc.counts[:] = s
    etc.sums[:] = np.asarray(means) * s
    etc.eliminate(np.array([True]))
    return etc.alive[0]


def test_etc_elimination_examples():
    np.testing.assert_array_equal(_etc_with_means([0.9, 0.1], 100), [True, False])
    # radius 0.3035 keeps arms 0.5 apart
    np.testing.assert_array_equal(_etc_with_means([0.9, 0.4], 100), [True, True])
    # at s = T any strict difference eliminates
    np.testing.assert_array_equal(_etc_with_means([0.5, 0.4999], 10**4), [True, False])


def test_etc_round_robin_and_monotone_set():
    rng = np.random.default_rng(0)
    means = np.array([1.0, 0.0, 0.9, -1.0])
    etc = EtcEliminator(4, horizon=1e4, cadence=Cadence(EVERY_ROUND))
    seen = []
    alive_prev = etc.alive.copy()
    for t in range(1, 2001):
        arms = etc.next_arm()
        assert etc.alive[0, arms[0]]
        seen.append(int(arms[0]))
        etc_ingest(etc, lambda a: means[a] + rng.standard_normal(a.shape), t)
        assert np.all(etc.alive <= alive_prev)
        alive_prev = etc.alive.copy()
    assert seen[:8] == [0, 1, 2, 3, 0, 1, 2, 3]
    assert etc.alive[0, 0] and not etc.alive[0, 3]


def test_etc_keeps_best_arm():
    # 1000 runs of the five-arm instance, alpha = 1, horizon 1e4
    rows = 1000
    means = np.array(FIVE_ARM_MEANS)
    rng = np.random.default_rng(99)
    etc = EtcEliminator(5, rows, 1.0, 1e4, Cadence(EVERY_ROUND))
    for t in range(1, 4001):
        arms = etc.next_arm()
        etc.add(arms, means[arms] + rng.standard_normal(rows))
        etc.maybe_check(t)
    lost = np.mean(~etc.alive[:, 0])
    assert lost < 0.02
    assert np.all(etc.alive.sum(axis=1) >= 1)


def test_ocucb_equal_counts_and_floor():
    t, n = 1000, 10
    idx = ocucb_indices([n, n, n], [0.1, 0.2, 0.3], t)
    B = max(math.e, math.log(t), t * math.log(t) / (3 * n))
    np.testing.assert_allclose(idx, np.array([0.1, 0.2, 0.3]) + math.sqrt(2 * 2 * math.log(B) / n))
    # log t <= e and t log t / sum < e: B = e so log B = 1
    idx = ocucb_indices([5, 5], [0.0, 1.0], 3)
    np.testing.assert_allclose(idx, np.array([0.0, 1.0]) + math.sqrt(2 * 2 / 5))


def test_ocucb_reference_values(oracle):
    got = [ocucb_index(i, [4, 16], [0.5, 0.4], 20, eta=2, rho=0.5) for i in range(2)]
    np.testing.assert_allclose(got, oracle["ocucb_N4_16_t20"], rtol=1e-12)
    with pytest.raises(PreconditionError):
        ocucb_indices([0, 3], [0.0, 0.0], 10)


def test_ocucb_inactive_arms():
    idx = ocucb_indices([[4, 0, 16]], [[0.5, 9.0, 0.4]], 20, active=np.array([[True, False, True]]))
    assert idx[0, 1] == -np.inf
    np.testing.assert_allclose(idx[0, [0, 2]], ocucb_indices([4, 16], [0.5, 0.4], 20))


def test_epoch_lengths():
    assert [epoch_length(m) for m in range(5)] == [2, 4, 16, 256, 65536]
    assert [epoch_length(m, 3) for m in range(3)] == [3, 27, 19683]


def _counters_with(means, n=50):
    c = ObservationCounters(len(means))
    for i, m in enumerate(means):
        for _ in range(n):
            c.record_pull(i, m)
    return c


def test_ftl_robin_decisions():
    pol = FtlRobin()
    pol.reset(2)
    c = _counters_with([0.9, 0.1])
    free = []
    for t in range(101, 105):
        d = pol.step(t, c, np.zeros(1), np.zeros(1))
        assert d.pull[0] == 0
        free.append(int(d.free_request[0]))
        pol.observe(t, d.pull, np.zeros(1), d.free_request, np.zeros(1), np.array([True]))
    assert free == [0, 1, 0, 1]


def test_index_policies_initialize_in_order():
    for pol in (UcbPassive(), Ucb1Double(), FtlRobin()):
        pol.reset(4)
        c = ObservationCounters(4)
        pulls = []
        for t in range(1, 5):
            d = pol.step(t, c, np.zeros(1), np.zeros(1))
            pulls.append(int(d.pull[0]))
            c.record_pull(d.pull, 0.0)
        assert pulls == [0, 1, 2, 3]


def test_ucb1_double_two_arms_observes_the_other():
    (config,) = parse_config(config_dict(arms=[{"kind": "bernoulli", "mean": 0.6}, {"kind": "bernoulli", "mean": 0.4}],
                                         observer={"kind": "active"}, policy={"name": "ucb1_double"},
                                         schedule={"kind": "deterministic", "epsilon": 1.0}))
    pol = config.policy.build()
    pol.reset(2, 50)
    tape = StageTape.for_replications(0, range(50))
    c = ObservationCounters(2, 50)
    for t in range(1, 300):
        u, _ = tape.stage(t)
        d = pol.step(t, c, u[:, 4], u[:, 5])
        assert np.all(d.free_request != d.pull)
        r = (u[:, 0] < np.where(d.pull == 0, 0.6, 0.4)).astype(float)
        c.record_pull(d.pull, r)
        c.record_free(d.free_request, 1.0 - r)


def test_ucb1_double_needs_two_arms():
    with pytest.raises(PreconditionError):
        Ucb1Double().reset(1)


def _active_config(**params):
    return parse_config(config_dict(arms=[{"kind": "gaussian", "mean": m} for m in FIVE_ARM_MEANS],
                                    observer={"kind": "active"}, horizon=3000, replications=20,
                                    policy={"name": "active", "params": params}))[0]


def test_active_free_requests_stay_in_surviving_set():
    config = _active_config()
    pol = config.policy.build()
    pol.reset(5, 20)
    tape = StageTape.for_replications(1, range(20))
    c = ObservationCounters(5, 20)
    rows = np.arange(20)
    means = np.array(FIVE_ARM_MEANS)
    for t in range(1, 3001):
        u, z = tape.stage(t)
        d = pol.step(t, c, u[:, 4], u[:, 5])
        assert np.all(pol.etc.alive[rows, d.free_request])
        assert np.all(pol.active[rows, d.pull])
        r = means[d.pull] + z[:, 0]
        c.record_pull(d.pull, r)
        mask = np.full(20, t % 10 == 0)
        fr = means[d.free_request] + z[:, 1]
        c.record_free(d.free_request, fr, mask)
        pol.observe(t, d.pull, r, d.free_request, fr, mask)


def test_active_singleton_set_pulls_only_that_arm():
    pol = ActiveEtcOcucb()
    pol.reset(3)
    pol.etc.alive[:] = [[True, False, False]]
    c = ObservationCounters(3)
    for t in range(1, 40):
        d = pol.step(t, c, np.zeros(1), np.zeros(1))
        if t > 4:  # first epoch boundary has passed
            assert d.pull[0] == 0
        c.record_pull(d.pull, 0.0)
        pol.observe(t, d.pull, np.zeros(1), None, None, None)


def test_active_parameter_validation():
    for kwargs in ({"alpha": 0.5}, {"rho": 0.3}, {"eta": 1.0}, {"epoch_base": 1}, {"variant": "x"}):
        with pytest.raises(ValueError):
            ActiveEtcOcucb(**kwargs)


def test_baseline_equals_passive_without_free_observations():
    a = parse_config(config_dict(schedule={"kind": "none"}))[0]
    b = a.with_changes(policy=PolicySpec("ucb_baseline"))
    ra, rb = run_batch(a, range(5)), run_batch(b, range(5))
    np.testing.assert_array_equal(ra.pulls, rb.pulls)
    np.testing.assert_array_equal(ra.regret, rb.regret)


@pytest.mark.parametrize("policy,observer", [("ucb_passive", "passive"), ("ftl_robin", "active"),
                                             ("ucb1_double", "active"), ("active", "active")])
def test_decisions_invariant_to_reward_shift(policy, observer):
    obs = {"kind": "passive", "p": "uniform"} if observer == "passive" else {"kind": "active"}
    base = config_dict(observer=obs, policy={"name": policy}, horizon=500)
    shifted = dict(base, arms=[{"kind": "gaussian", "mean": m + 0.5} for m in FOUR_ARM_MEANS])
    ra = run_batch(parse_config(base)[0], range(5))
    rb = run_batch(parse_config(shifted)[0], range(5))
    np.testing.assert_array_equal(ra.pulls, rb.pulls)
    np.testing.assert_array_equal(ra.free, rb.free)


@settings(max_examples=25, deadline=None)
@given(name=st.sampled_from(sorted(POLICIES)),
       means=st.lists(st.floats(-2, 2, allow_nan=False), min_size=2, max_size=5),
       seed=st.integers(0, 2**32 - 1),
       eps=st.sampled_from([0.05, 0.5, 1.0]))
def test_every_decision_is_a_valid_arm(name, means, seed, eps):
    inst = gaussian_instance(means)
    K = inst.n_arms
    observer = ObserverMode.active() if POLICIES[name]().requests_free else ObserverMode.passive([1 / K] * K)
    config = ExperimentConfig("prop", inst, FreeObsSchedule.static_random(eps), observer,
                              PolicySpec(name), 60, 3, seed, (60,))
    res = simulate(config, StageTape.for_replications(seed, range(3)))
    assert res.pulls.sum(axis=1).tolist() == [60, 60, 60]
    assert np.all(res.pulls >= 0) and np.all(res.free >= 0)


def test_golden_traces():
    with open(os.path.join(DATA, "golden_traces.json")) as fh:
        golden = json.load(fh)
    assert set(golden) == set(CASES)
    for name, obj in CASES.items():
        trace = run_single(parse_config(obj)[0], 3)
        np.testing.assert_allclose(trace.regret, golden[name]["regret"], rtol=0, atol=1e-9)
        assert trace.pulls.tolist() == golden[name]["pulls"]
        assert trace.free.tolist() == golden[name]["free"]
