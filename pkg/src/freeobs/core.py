"""Bandit problem instances, reward sampling, regret accounting and the
reproducible randomness contract.

Arms are indexed from 0 in code; "arm 1" of the usual mathematical notation
is index 0 here.  Instances keep the caller's arm order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import EmptyInstance, IndexOutOfRange, InvalidArm


@dataclass(frozen=True)
class Gaussian:
    mean: float
    variance: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise InvalidArm(f"Gaussian parameters must be finite, got {self}")
        if self.variance <= 0:
            raise InvalidArm(f"Gaussian variance must be > 0, got {self.variance}")

    @property
    def expectation(self) -> float:
        return float(self.mean)


@dataclass(frozen=True)
class Bernoulli:
    mean: float

    def __post_init__(self):
        if not 0.0 <= self.mean <= 1.0:
            raise InvalidArm(f"Bernoulli mean must lie in [0, 1], got {self.mean}")

    @property
    def expectation(self) -> float:
        return float(self.mean)


@dataclass(frozen=True)
class PointMass:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise InvalidArm(f"PointMass value must be finite, got {self.value}")

    @property
    def expectation(self) -> float:
        return float(self.value)


ArmSpec = Union[Gaussian, Bernoulli, PointMass]


@dataclass(frozen=True)
class ProblemInstance:
    """A K-armed stochastic bandit problem.

    ``mu``, ``mu_star`` and ``gaps`` are derived from ``arms`` on construction
    and never set independently.
    """

    arms: tuple
    mu: np.ndarray = field(init=False, repr=False, compare=False)
    mu_star: float = field(init=False, repr=False, compare=False)
    gaps: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mu = np.array([a.expectation for a in self.arms], dtype=float)
        mu_star = float(mu.max())
        gaps = mu_star - mu
        mu.setflags(write=False)
        gaps.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "mu_star", mu_star)
        object.__setattr__(self, "gaps", gaps)

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    def sampling_parameters(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-arm ``(loc, scale, bernoulli_p)`` such that a reward is
        ``loc + scale * z + (u < bernoulli_p)`` for a standard normal ``z``
        and a uniform ``u``."""
        loc = np.zeros(self.n_arms)
        scale = np.zeros(self.n_arms)
        bern = np.zeros(self.n_arms)
        for i, arm in enumerate(self.arms):
            if isinstance(arm, Gaussian):
                loc[i] = arm.mean
                scale[i] = math.sqrt(arm.variance)
            elif isinstance(arm, Bernoulli):
                bern[i] = arm.mean
            else:
                loc[i] = arm.value
        return loc, scale, bern

    @property
    def finite_support(self) -> bool:
        return all(isinstance(a, (Bernoulli, PointMass)) for a in self.arms)


def make_instance(arms: Sequence[ArmSpec]) -> ProblemInstance:
    arms = tuple(arms)
    if len(arms) < 2:
        raise EmptyInstance(f"need at least 2 arms, got {len(arms)}")
    for arm in arms:
        if not isinstance(arm, (Gaussian, Bernoulli, PointMass)):
            raise InvalidArm(f"unsupported arm specification {arm!r}")
    return ProblemInstance(arms)


def gaussian_instance(means: Sequence[float], variance: float = 1.0) -> ProblemInstance:
    return make_instance([Gaussian(float(m), variance) for m in means])


def check_arm(instance: ProblemInstance, arm) -> None:
    arm_arr = np.asarray(arm)
    if arm_arr.size and (arm_arr.min() < 0 or arm_arr.max() >= instance.n_arms):
        raise IndexOutOfRange(f"arm index {arm} outside range({instance.n_arms})")


def rewards_from_variates(instance: ProblemInstance, arms, u, z, params=None):
    """Map uniform/normal variates to rewards of ``arms`` (vectorized)."""
    loc, scale, bern = params if params is not None else instance.sampling_parameters()
    return loc[arms] + scale[arms] * z + (u < bern[arms])


def sample_reward(instance: ProblemInstance, arm: int, rng) -> float:
    """One draw from the reward distribution of ``arm``.

    ``rng`` is a :class:`RngStream` or a ``numpy.random.Generator``.
    """
    check_arm(instance, arm)
    gen = rng.generator if isinstance(rng, RngStream) else rng
    u = gen.random()
    z = gen.standard_normal()
    return float(rewards_from_variates(instance, np.intp(arm), u, z))


def pseudo_regret_increment(instance: ProblemInstance, pulled_arm) -> float:
    """Expected regret of one pull; free observations add nothing."""
    check_arm(instance, pulled_arm)
    return instance.gaps[pulled_arm]


# --- randomness contract -------------------------------------------------
#
# Every stage of a run consumes a fixed set of variates, whether or not the
# policy ends up needing them.  A replication's trajectory is then a function
# of its own stream only, independent of how replications are batched.

U_PULL, U_ARRIVAL, U_PASSIVE, U_FREE, U_TIE_PULL, U_TIE_FREE = range(6)
Z_PULL, Z_FREE = range(2)
N_UNIFORM = 6
N_NORMAL = 2
BLOCK = 2048


class RngStream:
    """Deterministic stream for replication ``replication_index`` of an
    experiment seeded with ``master_seed``."""

    def __init__(self, master_seed: int, replication_index: int = 0):
        if master_seed < 0 or replication_index < 0:
            raise ValueError("seed and replication index must be non-negative")
        self.master_seed = int(master_seed)
        self.replication_index = int(replication_index)
        seq = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.replication_index,))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def stage_block(self) -> tuple[np.ndarray, np.ndarray]:
        """Variates for the next ``BLOCK`` stages: ``(uniform, normal)`` with
        shapes ``(BLOCK, N_UNIFORM)`` and ``(BLOCK, N_NORMAL)``."""
        u = self.generator.random((BLOCK, N_UNIFORM))
        z = self.generator.standard_normal((BLOCK, N_NORMAL))
        return u, z


class StageTape:
    """Per-stage variates for a batch of runs, served block by block.

    Rows come either from one :class:`RngStream` per replication (the
    reproducible path) or from a single shared generator (bulk Monte Carlo,
    where per-replication identity does not matter).
    """

    def __init__(self, streams=None, *, generator=None, n_rows=None, block=BLOCK):
        if (streams is None) == (generator is None):
            raise ValueError("pass either streams or generator")
        if streams is not None and block != BLOCK:
            raise ValueError("per-replication streams always use the standard block size")
        self.block = int(block)
        self.streams = list(streams) if streams is not None else None
        self.generator = generator
        self.n_rows = len(self.streams) if streams is not None else int(n_rows)
        self._start = 0
        self._u = np.empty((self.n_rows, 0, N_UNIFORM))
        self._z = np.empty((self.n_rows, 0, N_NORMAL))

    @classmethod
    def for_replications(cls, master_seed: int, indices) -> "StageTape":
        return cls([RngStream(master_seed, i) for i in indices])

    @classmethod
    def bulk(cls, generator: np.random.Generator, n_rows: int, block: int = BLOCK) -> "StageTape":
        """Shared-generator tape; a short horizon can pass ``block=T`` to
        avoid drawing variates it will never use."""
        return cls(generator=generator, n_rows=n_rows, block=block)

    def _refill(self):
        if self.streams is not None:
            blocks = [s.stage_block() for s in self.streams]
            self._u = np.stack([b[0] for b in blocks])
            self._z = np.stack([b[1] for b in blocks])
        else:
            self._u = self.generator.random((self.n_rows, self.block, N_UNIFORM))
            self._z = self.generator.standard_normal((self.n_rows, self.block, N_NORMAL))

    def stage(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """Variates of stage ``t`` (1-based, consumed in increasing order):
        arrays of shape ``(n_rows, N_UNIFORM)`` and ``(n_rows, N_NORMAL)``."""
        offset = t - 1 - self._start
        if offset >= self._u.shape[1]:
            self._start += self._u.shape[1]
            self._refill()
            offset = t - 1 - self._start
        if offset < 0 or offset >= self._u.shape[1]:
            raise ValueError(f"stage {t} requested out of order")
        return self._u[:, offset], self._z[:, offset]
