"""Free-observation arrivals, passive observation draws and observation counters."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import IndexOutOfRange, InvalidDistribution

NONE = "none"
DETERMINISTIC = "deterministic"
STATIC_RANDOM = "static_random"

PASSIVE = "passive"
ACTIVE = "active"


@dataclass(frozen=True)
class FreeObsSchedule:
    """When free observations arrive.

    ``deterministic`` spaces arrivals evenly: stage ``t`` gets one iff
    ``floor(eps*t) > floor(eps*(t-1))``, so exactly ``floor(eps*T)`` arrive by
    stage ``T``.  ``static_random`` draws an independent Bernoulli(eps) per stage.
    """

    kind: str = NONE
    epsilon: float = 0.0

    def __post_init__(self):
        if self.kind not in (NONE, DETERMINISTIC, STATIC_RANDOM):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == NONE:
            object.__setattr__(self, "epsilon", 0.0)
        elif not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    @classmethod
    def none(cls) -> "FreeObsSchedule":
        return cls(NONE)

    @classmethod
    def deterministic(cls, epsilon: float) -> "FreeObsSchedule":
        return cls(DETERMINISTIC, float(epsilon))

    @classmethod
    def static_random(cls, epsilon: float) -> "FreeObsSchedule":
        return cls(STATIC_RANDOM, float(epsilon))

    @cached_property
    def _rate(self) -> Fraction:
        # decimal reading of the float, so that eps=0.3 really means 3/10
        return Fraction(repr(float(self.epsilon)))

    def arrivals(self, t: int) -> int:
        """Number of deterministic arrivals in stages ``1..t``."""
        rate = self._rate
        return (rate.numerator * t) // rate.denominator

    def available(self, t: int, u):
        """Vectorized ``Z_t`` given uniforms ``u`` (ignored unless static random)."""
        if self.kind == STATIC_RANDOM:
            return np.asarray(u) < self.epsilon
        if self.kind == DETERMINISTIC:
            return np.full(np.shape(u), self.arrivals(t) > self.arrivals(t - 1))
        return np.zeros(np.shape(u), dtype=bool)


@dataclass(frozen=True)
class ObserverMode:
    """Who picks the freely observed arm: the environment (``passive``, with
    categorical weights ``p``) or the policy (``active``)."""

    kind: str = ACTIVE
    p: Optional[tuple] = None

    def __post_init__(self):
        if self.kind == PASSIVE:
            object.__setattr__(self, "p", tuple(float(x) for x in validate_distribution(self.p)))
        elif self.kind == ACTIVE:
            object.__setattr__(self, "p", None)
        else:
            raise ValueError(f"unknown observer kind {self.kind!r}")

    @classmethod
    def passive(cls, p: Sequence[float]) -> "ObserverMode":
        return cls(PASSIVE, tuple(p))

    @classmethod
    def active(cls) -> "ObserverMode":
        return cls(ACTIVE)


def validate_distribution(p, tol: float = 1e-9) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidDistribution("probability vector must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidDistribution(f"probabilities must be finite and >= 0, got {arr}")
    if abs(arr.sum() - 1.0) > tol:
        raise InvalidDistribution(f"probabilities sum to {arr.sum()!r}, not 1")
    return arr


def free_obs_available(schedule: FreeObsSchedule, t: int, rng) -> bool:
    """``Z_t`` for a single run.  Consumes one uniform only for static random
    schedules."""
    if t < 1:
        raise ValueError("stages start at t = 1")
    u = rng.random() if schedule.kind == STATIC_RANDOM else 0.0
    return bool(schedule.available(t, u))


def passive_draw_from_uniform(cumulative: np.ndarray, u):
    """Categorical draw by inversion; ``cumulative`` is ``np.cumsum(p)``."""
    idx = np.searchsorted(cumulative, u, side="right")
    return np.minimum(idx, len(cumulative) - 1)


def passive_draw(p, rng) -> int:
    cumulative = np.cumsum(validate_distribution(p))
    return int(passive_draw_from_uniform(cumulative, rng.random()))


class ObservationCounters:
    """Per-arm pull/free counts and reward sums for ``n_rows`` parallel runs.

    All rows share the stage counter ``t``.  Scalar arguments broadcast over
    rows, so a single run is simply ``n_rows=1``.
    """

    def __init__(self, n_arms: int, n_rows: int = 1):
        self.n_arms = n_arms
        self.n_rows = n_rows
        self.N = np.zeros((n_rows, n_arms), dtype=np.int64)
        self.F = np.zeros((n_rows, n_arms), dtype=np.int64)
        self.sum_pull = np.zeros((n_rows, n_arms))
        self.sum_free = np.zeros((n_rows, n_arms))
        self.t = 0
        self._rows = np.arange(n_rows)

    @property
    def O(self) -> np.ndarray:
        return self.N + self.F

    @property
    def sum_combined(self) -> np.ndarray:
        return self.sum_pull + self.sum_free

    def _check(self, arms):
        arms = np.broadcast_to(np.asarray(arms, dtype=np.intp), (self.n_rows,))
        if arms.min() < 0 or arms.max() >= self.n_arms:
            raise IndexOutOfRange(f"arm index outside range({self.n_arms})")
        return arms

    def record_pull(self, arms, rewards) -> "ObservationCounters":
        arms = self._check(arms)
        rewards = np.broadcast_to(np.asarray(rewards, dtype=float), (self.n_rows,))
        self.N[self._rows, arms] += 1
        self.sum_pull[self._rows, arms] += rewards
        self.t += 1
        return self

    def record_free(self, arms, rewards, mask=None) -> "ObservationCounters":
        arms = self._check(arms)
        rewards = np.broadcast_to(np.asarray(rewards, dtype=float), (self.n_rows,))
        rows = self._rows if mask is None else self._rows[np.asarray(mask, dtype=bool)]
        arms = arms[rows]
        self.F[rows, arms] += 1
        self.sum_free[rows, arms] += rewards[rows]
        return self


def record_pull(counters: ObservationCounters, arm, reward) -> ObservationCounters:
    return counters.record_pull(arm, reward)


def record_free(counters: ObservationCounters, arm, reward, mask=None) -> ObservationCounters:
    return counters.record_free(arm, reward, mask)


def empirical_means(sums: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Sample means with ``nan`` for unobserved arms."""
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def log_spaced_checkpoints(horizon: int, n: int = 100) -> list[int]:
    pts = np.unique(np.round(np.logspace(0, math.log10(horizon), n)).astype(np.int64))
    pts = [int(x) for x in pts if 1 <= x <= horizon]
    if pts[-1] != horizon:
        pts.append(horizon)
    return pts
