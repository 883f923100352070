"""Exact expected pseudo-regret by enumerating every outcome sequence.

The decision rules are re-implemented here in plain Python, separately from
:mod:`freeobs.policies`, so that agreement between the two is evidence that
both are right.  Rewards must have finite support (Bernoulli or point-mass
arms).  Ties between maximizers are marginalized: each of the ``m`` tied arms
is followed with weight ``1/m``.
"""

from __future__ import annotations

import math

from ..core import Bernoulli, PointMass
from ..environments import ACTIVE, NONE, STATIC_RANDOM
from ..errors import PreconditionError, TooLarge
from .config import ExperimentConfig

ORACLE_POLICIES = ("ftl_robin", "ucb_passive", "ucb_baseline", "ucb1_double")
DEFAULT_LEAF_BUDGET = 1_000_000


def _support(arm):
    if isinstance(arm, PointMass):
        return [(arm.value, 1.0)]
    if isinstance(arm, Bernoulli):
        return [(v, w) for v, w in ((1.0, arm.mean), (0.0, 1.0 - arm.mean)) if w > 0]
    raise PreconditionError("the oracle needs Bernoulli or point-mass arms")


def _maximizers(values):
    best = max(values)
    return [i for i, v in enumerate(values) if v == best]


class _State:
    __slots__ = ("N", "F", "sp", "sf", "robin")

    def __init__(self, K):
        self.N = [0] * K
        self.F = [0] * K
        self.sp = [0.0] * K
        self.sf = [0.0] * K
        self.robin = 0

    def copy(self):
        s = _State.__new__(_State)
        s.N, s.F, s.sp, s.sf, s.robin = self.N[:], self.F[:], self.sp[:], self.sf[:], self.robin
        return s


def _ucb_scores(state, t, exploration, use_free):
    out = []
    for i in range(len(state.N)):
        n = state.N[i] + state.F[i] if use_free else state.N[i]
        s = state.sp[i] + state.sf[i] if use_free else state.sp[i]
        out.append(s / n + math.sqrt(exploration * math.log(t) / n))
    return out


def _pull_choices(name, state, t, K, exploration):
    """``[(arm, weight)]`` for the pull of stage ``t``."""
    if t <= K:
        return [(t - 1, 1.0)]
    if name == "ftl_robin":
        scores = [(state.sp[i] + state.sf[i]) / (state.N[i] + state.F[i]) for i in range(K)]
    else:
        scores = _ucb_scores(state, t, exploration, use_free=name != "ucb_baseline")
    best = _maximizers(scores)
    return [(i, 1.0 / len(best)) for i in best]


def _free_choices(name, state, t, K, pull, p, exploration):
    """``[(arm, weight)]`` for the freely observed arm, given the pull.
    Decided on the state before the pull, like the pull itself."""
    if p is not None:
        return [(i, w) for i, w in enumerate(p) if w > 0]
    if name == "ftl_robin":
        return [(state.robin, 1.0)]
    if name == "ucb1_double":
        if t <= K:
            return [(t % K, 1.0)]
        scores = _ucb_scores(state, t, exploration, use_free=True)
        scores[pull] = -math.inf
        best = _maximizers(scores)
        return [(i, 1.0 / len(best)) for i in best]
    raise PreconditionError(f"policy {name} does not choose free observations")


def brute_force_expected_regret(config: ExperimentConfig, horizon: int = None,
                                leaf_budget: int = DEFAULT_LEAF_BUDGET) -> float:
    """Exact ``E[sum_i gap_i N_i(T)]`` for ``config`` at ``horizon`` (default
    the configured horizon)."""
    T = config.horizon if horizon is None else horizon
    name = config.policy.name
    if name not in ORACLE_POLICIES:
        raise PreconditionError(f"the oracle supports {ORACLE_POLICIES}, not {name!r}")
    if T < 0:
        raise ValueError("horizon must be >= 0")
    arms = config.instance.arms
    K = len(arms)
    supports = [_support(a) for a in arms]
    gaps = [float(g) for g in config.instance.gaps]
    exploration = float(config.policy.params.get("exploration", 6.0))
    schedule = config.schedule
    p = None if config.observer.kind == ACTIVE else list(config.observer.p)
    leaves = [0]

    def arrival_branches(t):
        if schedule.kind == NONE:
            return [(False, 1.0)]
        if schedule.kind == STATIC_RANDOM:
            eps = schedule.epsilon
            return [(z, w) for z, w in ((True, eps), (False, 1.0 - eps)) if w > 0]
        return [(bool(schedule.available(t, 0.0)), 1.0)]

    def expand(state, t):
        if t > T:
            leaves[0] += 1
            if leaves[0] > leaf_budget:
                raise TooLarge(f"outcome tree exceeds {leaf_budget} leaves")
            return 0.0
        total = 0.0
        for arm, w_arm in _pull_choices(name, state, t, K, exploration):
            for x, w_x in supports[arm]:
                pulled = state.copy()
                pulled.N[arm] += 1
                pulled.sp[arm] += x
                sub = 0.0
                for z, w_z in arrival_branches(t):
                    if not z:
                        sub += w_z * expand(pulled, t + 1)
                        continue
                    for f, w_f in _free_choices(name, state, t, K, arm, p, exploration):
                        for y, w_y in supports[f]:
                            nxt = pulled.copy()
                            nxt.F[f] += 1
                            nxt.sf[f] += y
                            nxt.robin = (nxt.robin + 1) % K
                            sub += w_z * w_f * w_y * expand(nxt, t + 1)
                total += w_arm * w_x * (gaps[arm] + sub)
        return total

    return expand(_State(K), 1)
