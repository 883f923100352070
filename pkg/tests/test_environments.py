import numpy as np
import pytest

from freeobs.bounds import optimal_passive_distribution
from freeobs.environments import (FreeObsSchedule, ObservationCounters, ObserverMode, empirical_means,
                                  free_obs_available, log_spaced_checkpoints, passive_draw,
                                  passive_draw_from_uniform, record_free, record_pull,
                                  validate_distribution)
from freeobs.errors import IndexOutOfRange, InvalidDistribution

from conftest import FOUR_ARM_GAPS


def test_deterministic_half():
    s = FreeObsSchedule.deterministic(0.5)
    got = [t for t in range(1, 11) if free_obs_available(s, t, None)]
    assert got == [2, 4, 6, 8, 10]


def test_deterministic_one_and_counts():
    s = FreeObsSchedule.deterministic(1.0)
    assert all(free_obs_available(s, t, None) for t in range(1, 50))
    for eps in (0.1, 0.3, 0.01, 0.37):
        s = FreeObsSchedule.deterministic(eps)
        for T in (1, 9, 10, 99, 1000, 12345):
            hits = sum(free_obs_available(s, t, None) for t in range(1, T + 1))
            assert hits == s.arrivals(T)


def test_deterministic_uses_decimal_rate():
    # 0.1 * 10 is 1 exactly only with the decimal reading of the float
    s = FreeObsSchedule.deterministic(0.1)
    assert [t for t in range(1, 31) if free_obs_available(s, t, None)] == [10, 20, 30]


def test_static_random_rate():
    s = FreeObsSchedule.static_random(0.1)
    rng = np.random.default_rng(12)
    hits = np.mean([free_obs_available(s, t, rng) for t in range(1, 10**5 + 1)])
    assert abs(hits - 0.1) < 0.005
    u = np.random.default_rng(13).random(10**6)
    assert abs(s.available(1, u).mean() - 0.1) < 0.002


def test_no_schedule_and_validation():
    s = FreeObsSchedule.none()
    assert not any(free_obs_available(s, t, None) for t in range(1, 20))
    for bad in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            FreeObsSchedule.deterministic(bad)
    with pytest.raises(ValueError):
        free_obs_available(s, 0, None)


def test_passive_draws():
    rng = np.random.default_rng(3)
    assert all(passive_draw([1, 0, 0, 0], rng) == 0 for _ in range(100))
    u = np.random.default_rng(4).random(10**5)
    freq = np.bincount(passive_draw_from_uniform(np.cumsum([0.25] * 4), u), minlength=4) / u.size
    np.testing.assert_allclose(freq, 0.25, atol=0.01)


def test_optimal_distribution_frequencies(oracle):
    p = optimal_passive_distribution(FOUR_ARM_GAPS)
    np.testing.assert_allclose(p, oracle["p_star_four_arm"], atol=1e-12)
    u = np.random.default_rng(5).random(10**6)
    freq = np.bincount(passive_draw_from_uniform(np.cumsum(p), u), minlength=4) / u.size
    np.testing.assert_allclose(freq, [0.0, 0.8036, 0.1071, 0.0893], atol=0.002)


def test_zero_weight_arm_never_drawn():
    # u close to 1 must not spill into a trailing zero-weight arm
    cum = np.cumsum([0.5, 0.5, 0.0])
    assert passive_draw_from_uniform(cum, np.array([0.999999999]))[0] == 1


def test_distribution_validation():
    for bad in ([0.5, 0.6], [-0.1, 1.1], [], [np.nan, 1.0]):
        with pytest.raises(InvalidDistribution):
            validate_distribution(bad)
    with pytest.raises(InvalidDistribution):
        ObserverMode.passive([0.2, 0.2])


def test_counters():
    c = ObservationCounters(3)
    record_pull(c, 0, 0.3)
    assert c.N[0, 0] == 1 and c.O[0, 0] == 1 and c.t == 1
    record_free(c, 1, 0.9)
    assert c.F[0, 1] == 1 and c.O[0, 1] == 1 and c.t == 1
    for _ in range(100):
        c.record_pull(2, 1.0)
    for _ in range(10):
        c.record_free(2, 0.0)
    assert c.O[0, 2] == 110 == c.N[0, 2] + c.F[0, 2]
    np.testing.assert_allclose(empirical_means(c.sum_combined, c.O)[0], [0.3, 0.9, 100 / 110])
    with pytest.raises(IndexOutOfRange):
        c.record_pull(3, 0.0)


def test_counters_masked_rows():
    c = ObservationCounters(2, n_rows=3)
    c.record_free(np.array([0, 1, 1]), np.array([1.0, 2.0, 3.0]), np.array([True, False, True]))
    np.testing.assert_array_equal(c.F, [[1, 0], [0, 0], [0, 1]])
    np.testing.assert_array_equal(c.sum_free, [[1.0, 0], [0, 0], [0, 3.0]])


def test_empirical_means_unobserved_is_nan():
    assert np.isnan(empirical_means(np.zeros(2), np.zeros(2))).all()


def test_log_spaced_checkpoints():
    cp = log_spaced_checkpoints(10**4)
    assert cp[0] == 1 and cp[-1] == 10**4
    assert all(b > a for a, b in zip(cp, cp[1:]))
    assert log_spaced_checkpoints(1) == [1]
