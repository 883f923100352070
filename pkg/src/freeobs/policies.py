"""Decision rules for bandits with free observations.

Every policy works on a batch of independent runs at once: state arrays have
one row per run, and ``step`` returns one decision per row.  A single run is
a batch of one.  Ties in any argmax are broken uniformly at random using the
tie-break variates the caller supplies for the stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .environments import ObservationCounters
from .errors import PreconditionError

EXPLORATION_UCB = 6.0


@dataclass
class PolicyDecision:
    """Arm to pull and, for active observers, arm to observe if ``Z_t = 1``."""

    pull: np.ndarray
    free_request: Optional[np.ndarray] = None


def argmax_random_tie(values: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Row-wise argmax, choosing uniformly among exact maximizers with ``u``."""
    is_max = values == values.max(axis=1, keepdims=True)
    n_max = is_max.sum(axis=1)
    target = np.minimum((u * n_max).astype(np.int64), n_max - 1)
    return np.argmax(np.cumsum(is_max, axis=1) > target[:, None], axis=1)


def ucb_passive_index(mean, O, t, exploration: float = EXPLORATION_UCB):
    """``mean + sqrt(exploration * log(t) / O)``."""
    O = np.asarray(O)
    if np.any(O < 1):
        raise PreconditionError("UCB index needs at least one observation per arm")
    if np.any(np.asarray(t) < 1):
        raise PreconditionError("stage t must be >= 1")
    return mean + np.sqrt(exploration * np.log(t) / O)


# OCUCB-n denominator terms, as functions of (N_j, N_i, rho).  The first one is
# the default; the second swaps the roles of i and j inside the power mean.
OCUCB_SUM_VARIANTS = {
    "other_power": lambda nj, ni, rho: np.minimum(nj, nj**rho * ni ** (1.0 - rho)),
    "self_power": lambda nj, ni, rho: np.minimum(nj, ni**rho * nj ** (1.0 - rho)),
}


def ocucb_indices(counts, means, t, eta: float = 2.0, rho: float = 0.5, active=None,
                  variant: str = "other_power") -> np.ndarray:
    """OCUCB-n indices for every arm of every row.

    ``counts`` and ``means`` have shape ``(rows, K)``; arms outside the
    ``active`` mask get ``-inf`` and are left out of the denominator sum.
    """
    counts = np.asarray(counts, dtype=float)
    means = np.asarray(means, dtype=float)
    if counts.ndim == 1:
        return ocucb_indices(counts[None], means[None], t, eta, rho,
                             None if active is None else np.asarray(active)[None], variant)[0]
    if active is None:
        active = np.ones(counts.shape, dtype=bool)
    if np.any(counts[active] < 1):
        raise PreconditionError("OCUCB-n needs every active arm observed at least once")
    if t < 1:
        raise PreconditionError("stage t must be >= 1")
    safe = np.where(active, counts, 1.0)
    terms = OCUCB_SUM_VARIANTS[variant](safe[:, None, :], safe[:, :, None], rho)
    denom = np.where(active[:, None, :], terms, 0.0).sum(axis=2)
    log_t = math.log(t)
    B = np.maximum(max(math.e, log_t), t * log_t / denom)
    index = means + np.sqrt(2.0 * eta * np.log(B) / safe)
    return np.where(active, index, -np.inf)


def ocucb_index(i: int, counts, means, t: int, eta: float = 2.0, rho: float = 0.5,
                variant: str = "other_power") -> float:
    return float(ocucb_indices(counts, means, t, eta, rho, variant=variant)[i])


class Policy:
    """Common interface.  ``reset`` before a run, then per stage ``step``
    (decide) and ``observe`` (learn from what the stage revealed)."""

    name = "policy"
    requests_free = False

    def reset(self, n_arms: int, n_rows: int = 1) -> None:
        self.n_arms = n_arms
        self.n_rows = n_rows
        self._rows = np.arange(n_rows)

    def step(self, t: int, counters: ObservationCounters, u_tie_pull, u_tie_free) -> PolicyDecision:
        raise NotImplementedError

    def observe(self, t, pulled, pull_rewards, free_arms, free_rewards, free_mask) -> None:
        pass

    def _init_pull(self, t: int) -> np.ndarray:
        return np.full(self.n_rows, t - 1, dtype=np.int64)


class FtlRobin(Policy):
    """Pull the empirical leader on all observations; spend free observations
    on the arms in round-robin order."""

    name = "ftl_robin"
    requests_free = True

    def reset(self, n_arms, n_rows=1):
        super().reset(n_arms, n_rows)
        self.next_free = np.zeros(n_rows, dtype=np.int64)

    def step(self, t, counters, u_tie_pull, u_tie_free):
        if t <= self.n_arms:
            pull = self._init_pull(t)
        else:
            O = counters.O
            if np.any(O < 1):
                raise PreconditionError("FTL-robin needs every arm observed at least once")
            pull = argmax_random_tie(counters.sum_combined / O, u_tie_pull)
        return PolicyDecision(pull, self.next_free.copy())

    def observe(self, t, pulled, pull_rewards, free_arms, free_rewards, free_mask):
        if free_mask is not None:
            self.next_free[free_mask] = (self.next_free[free_mask] + 1) % self.n_arms


class UcbPassive(Policy):
    """UCB whose means and exploration terms use pulls and free observations
    alike.  With ``use_free=False`` it is the plain bandit baseline that
    discards the free information."""

    name = "ucb_passive"

    def __init__(self, exploration: float = EXPLORATION_UCB, use_free: bool = True):
        self.exploration = exploration
        self.use_free = use_free

    def indices(self, t, counters):
        if self.use_free:
            counts, sums = counters.O, counters.sum_combined
        else:
            counts, sums = counters.N, counters.sum_pull
        return ucb_passive_index(sums / np.maximum(counts, 1), counts, t, self.exploration)

    def step(self, t, counters, u_tie_pull, u_tie_free):
        if t <= self.n_arms:
            return PolicyDecision(self._init_pull(t))
        return PolicyDecision(argmax_random_tie(self.indices(t, counters), u_tie_pull))


def UcbBaseline(exploration: float = EXPLORATION_UCB) -> UcbPassive:
    policy = UcbPassive(exploration, use_free=False)
    policy.name = "ucb_baseline"
    return policy


class Ucb1Double(UcbPassive):
    """Pull the UCB leader; observe the arm with the second highest index."""

    name = "ucb1_double"
    requests_free = True

    def __init__(self, exploration: float = EXPLORATION_UCB):
        super().__init__(exploration, use_free=True)

    def reset(self, n_arms, n_rows=1):
        if n_arms < 2:
            raise PreconditionError("UCB1-Double needs K >= 2")
        super().reset(n_arms, n_rows)

    def step(self, t, counters, u_tie_pull, u_tie_free):
        if t <= self.n_arms:
            # during initialization, observe the next arm in line
            return PolicyDecision(self._init_pull(t), np.full(self.n_rows, t % self.n_arms, dtype=np.int64))
        idx = self.indices(t, counters)
        pull = argmax_random_tie(idx, u_tie_pull)
        idx[self._rows, pull] = -np.inf
        return PolicyDecision(pull, argmax_random_tie(idx, u_tie_free))


# --- explore-then-commit on free observations --------------------------------

EVERY_ROUND = "every_round"
EVERY_C_ROUNDS = "every_c_rounds"
POWERS_OF_TWO = "powers_of_two"


@dataclass(frozen=True)
class Cadence:
    """When ETC compares arms: after every completed round, once at least
    ``c * |S|`` observations arrived since the last check, or at stages that
    are powers of two."""

    kind: str = EVERY_ROUND
    c: int = 10

    def __post_init__(self):
        if self.kind not in (EVERY_ROUND, EVERY_C_ROUNDS, POWERS_OF_TWO):
            raise ValueError(f"unknown cadence {self.kind!r}")
        if self.c < 1:
            raise ValueError("cadence constant c must be >= 1")


def etc_radius(s, log_horizon: float, alpha: float = 1.0):
    """``sqrt((2 alpha / s) log(T / s))``, zero once ``s >= T``.

    The horizon enters through its logarithm so that very long epochs do not
    overflow.
    """
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.maximum(log_horizon - np.log(s), 0.0)
        return np.sqrt(2.0 * alpha / s * log_ratio)


class EtcEliminator:
    """Explore-then-commit state for a batch of runs.

    Observations are requested round-robin over the surviving set (least
    observed surviving arm first, lowest index on ties).  Comparisons discard
    every surviving arm whose upper confidence bound falls below the best lower
    confidence bound; with equal counts this is the classical rule.
    """

    def __init__(self, n_arms: int, n_rows: int = 1, alpha: float = 1.0,
                 horizon: float = 1e4, cadence: Cadence = Cadence()):
        if alpha < 1:
            raise ValueError("ETC needs alpha >= 1")
        self.n_arms = n_arms
        self.n_rows = n_rows
        self.alpha = alpha
        self.cadence = cadence
        self.log_horizon = math.log(horizon)
        self.alive = np.ones((n_rows, n_arms), dtype=bool)
        self.counts = np.zeros((n_rows, n_arms), dtype=np.int64)
        self.sums = np.zeros((n_rows, n_arms))
        self.since_check = np.zeros(n_rows, dtype=np.int64)
        self.last_round = np.zeros(n_rows, dtype=np.int64)
        self._rows = np.arange(n_rows)

    def set_log_horizon(self, log_horizon: float) -> None:
        self.log_horizon = log_horizon

    def next_arm(self) -> np.ndarray:
        big = np.iinfo(np.int64).max
        return np.argmin(np.where(self.alive, self.counts, big), axis=1)

    def _round(self) -> np.ndarray:
        big = np.iinfo(np.int64).max
        return np.where(self.alive, self.counts, big).min(axis=1)

    def add(self, arms, rewards, mask=None, scheduled: bool = True) -> None:
        """Record observations; ``scheduled`` ones count toward the cadence."""
        rows = self._rows if mask is None else self._rows[mask]
        arms = np.broadcast_to(arms, (self.n_rows,))[rows]
        self.counts[rows, arms] += 1
        self.sums[rows, arms] += np.broadcast_to(rewards, (self.n_rows,))[rows]
        if scheduled:
            self.since_check[rows] += 1

    def eliminate(self, rows_mask: np.ndarray) -> None:
        """Apply the elimination rule on the selected rows."""
        rows_mask = rows_mask & np.all(self.counts > 0, axis=1, where=self.alive)
        if not rows_mask.any():
            return
        counts = np.maximum(self.counts[rows_mask], 1)
        means = self.sums[rows_mask] / counts
        radius = etc_radius(counts, self.log_horizon, self.alpha)
        alive = self.alive[rows_mask]
        best_lower = np.where(alive, means - radius, -np.inf).max(axis=1, keepdims=True)
        self.alive[rows_mask] = alive & ~(means + radius < best_lower)

    def maybe_check(self, t: int) -> None:
        kind = self.cadence.kind
        if kind == EVERY_ROUND:
            current = self._round()
            due = current > self.last_round
            self.last_round = np.where(due, current, self.last_round)
        elif kind == EVERY_C_ROUNDS:
            due = self.since_check >= self.cadence.c * self.alive.sum(axis=1)
        else:
            if t & (t - 1):
                return
            due = np.ones(self.n_rows, dtype=bool)
        if due.any():
            self.eliminate(due)
            self.since_check[due] = 0
            if kind == EVERY_ROUND:
                self.last_round = np.where(due, self._round(), self.last_round)

    def ingest(self, sample, t: int = 0, mask=None) -> np.ndarray:
        """One free-observation opportunity: pick the next arm, observe it
        through ``sample(arms) -> rewards`` and run the cadence check."""
        arms = self.next_arm()
        self.add(arms, sample(arms), mask)
        self.maybe_check(t)
        return arms


def etc_ingest(etc_state: EtcEliminator, sample, t: int = 0, mask=None) -> EtcEliminator:
    etc_state.ingest(sample, t, mask)
    return etc_state


def epoch_length(m: int, base: int = 2) -> int:
    """``base ** (base ** m)``."""
    return base ** (base**m)


def etc_log_horizon(d_next: int) -> float:
    """``log(d^(3/2) log d)`` for the epoch that follows, computed in log space."""
    log_d = math.log(d_next)
    return 1.5 * log_d + math.log(log_d)


class ActiveEtcOcucb(Policy):
    """Epoch-based active observer.

    Within epoch ``m`` (length ``base ** base**m``) pulls follow OCUCB-n restricted
    to the current surviving set, restarted from scratch at the epoch start,
    while free observations feed an explore-then-commit subroutine whose
    confidence horizon is tuned to the next epoch.  The set ETC holds at the end
    of an epoch is the pull set of the following one.  ETC statistics persist
    across epochs.

    ``share_info=True`` lets both subroutines learn from pulls and free
    observations alike; otherwise they keep separate reward tracks.
    """

    name = "active"
    requests_free = True

    def __init__(self, alpha: float = 1.0, rho: float = 0.5, eta: float = 2.0,
                 cadence: Cadence = Cadence(EVERY_C_ROUNDS, 10), epoch_base: int = 2,
                 share_info: bool = False, variant: str = "other_power"):
        if alpha < 1:
            raise ValueError("alpha must be >= 1")
        if not 0.5 <= rho <= 1.0:
            raise ValueError("rho must lie in [1/2, 1]")
        if eta <= 1:
            raise ValueError("eta must be > 1")
        if epoch_base < 2:
            raise ValueError("epoch base must be an integer >= 2")
        if variant not in OCUCB_SUM_VARIANTS:
            raise ValueError(f"unknown OCUCB-n variant {variant!r}")
        self.alpha = alpha
        self.rho = rho
        self.eta = eta
        self.cadence = cadence
        self.epoch_base = int(epoch_base)
        self.share_info = share_info
        self.variant = variant

    def reset(self, n_arms, n_rows=1):
        super().reset(n_arms, n_rows)
        self.epoch = 0
        self.epoch_start = 1
        self.epoch_end = epoch_length(0, self.epoch_base)
        self.active = np.ones((n_rows, n_arms), dtype=bool)
        self.oc_counts = np.zeros((n_rows, n_arms), dtype=np.int64)
        self.oc_sums = np.zeros((n_rows, n_arms))
        self.etc = EtcEliminator(n_arms, n_rows, self.alpha, 1.0, self.cadence)
        self.etc.set_log_horizon(etc_log_horizon(epoch_length(1, self.epoch_base)))

    def _start_next_epoch(self):
        self.epoch += 1
        self.epoch_start = self.epoch_end + 1
        self.epoch_end += epoch_length(self.epoch, self.epoch_base)
        self.active = self.etc.alive.copy()
        self.oc_counts[:] = 0
        self.oc_sums[:] = 0.0
        self.etc.set_log_horizon(etc_log_horizon(epoch_length(self.epoch + 1, self.epoch_base)))

    def step(self, t, counters, u_tie_pull, u_tie_free):
        while t > self.epoch_end:
            self._start_next_epoch()
        unseen = self.active & (self.oc_counts == 0)
        needs_init = unseen.any(axis=1)
        pull = np.argmax(unseen, axis=1)
        if not needs_init.all():
            rows = ~needs_init
            means = self.oc_sums[rows] / np.maximum(self.oc_counts[rows], 1)
            idx = ocucb_indices(self.oc_counts[rows], means, t - self.epoch_start + 1,
                                self.eta, self.rho, self.active[rows], self.variant)
            pull[rows] = argmax_random_tie(idx, u_tie_pull[rows])
        return PolicyDecision(pull, self.etc.next_arm())

    def observe(self, t, pulled, pull_rewards, free_arms, free_rewards, free_mask):
        rows = self._rows
        self.oc_counts[rows, pulled] += 1
        self.oc_sums[rows, pulled] += pull_rewards
        if self.share_info:
            self.etc.add(pulled, pull_rewards, scheduled=False)
        if free_mask is not None and free_mask.any():
            self.etc.add(free_arms, free_rewards, free_mask)
            if self.share_info:
                fr = rows[free_mask]
                self.oc_counts[fr, free_arms[fr]] += 1
                self.oc_sums[fr, free_arms[fr]] += free_rewards[fr]
        self.etc.maybe_check(t)


POLICIES = {
    "ftl_robin": FtlRobin,
    "ucb_passive": UcbPassive,
    "ucb_baseline": UcbBaseline,
    "ucb1_double": Ucb1Double,
    "active": ActiveEtcOcucb,
}
