"""Concentration thresholds for sub-Gaussian martingales and Bernoulli sums,
with Monte-Carlo validators that check each analytic bound empirically.

Every validator returns an :class:`McEstimate`; it passes when the estimate
minus three standard errors stays below the analytic bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

GAUSSIAN = "gaussian"
BERNOULLI = "bernoulli"
FAMILIES = (GAUSSIAN, BERNOULLI)

MIN_TRIALS = 10_000
_CHUNK_CELLS = 4_000_000  # variates per chunk of sample paths


@dataclass(frozen=True)
class MartingaleSpec:
    """Increment law of a martingale with ``sigma2``-sub-Gaussian steps.

    ``gaussian`` increments are N(0, sigma2).  ``bernoulli`` increments are
    ``2 sqrt(sigma2) (X - p)`` with ``X ~ Bernoulli(p)``: bounded in an
    interval of width ``2 sqrt(sigma2)``, hence sigma2-sub-Gaussian by
    Hoeffding's lemma.
    """

    family: str = GAUSSIAN
    sigma2: float = 1.0
    horizon: int = 1000
    p: float = 0.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown increment family {self.family!r}")
        if not self.sigma2 > 0:
            raise DomainError("sigma2 must be > 0")
        if self.horizon < 1:
            raise DomainError("horizon must be >= 1")
        if not 0.0 < self.p < 1.0:
            raise DomainError("Bernoulli parameter must lie in (0, 1)")

    def increments(self, rng: np.random.Generator, n_paths: int) -> np.ndarray:
        shape = (n_paths, self.horizon)
        scale = math.sqrt(self.sigma2)
        if self.family == GAUSSIAN:
            return scale * rng.standard_normal(shape)
        x = rng.random(shape) < self.p
        return 2.0 * scale * (x - self.p)


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    bound: float
    trials: int

    @property
    def passed(self) -> bool:
        return self.estimate - 3.0 * self.stderr <= self.bound


def _estimate(hits: int, trials: int, bound: float) -> McEstimate:
    q = hits / trials
    return McEstimate(q, math.sqrt(q * (1.0 - q) / trials), float(bound), trials)


def _check_trials(trials: int) -> None:
    if trials < MIN_TRIALS:
        raise DomainError(f"need at least {MIN_TRIALS} trials, got {trials}")


def _running_means(spec: MartingaleSpec, rng, trials: int):
    """Yield chunks of running means ``Zbar_t``, shape ``(paths, T)``."""
    chunk = max(1, _CHUNK_CELLS // spec.horizon)
    t = np.arange(1, spec.horizon + 1)
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        yield np.cumsum(spec.increments(rng, n), axis=1) / t
        done += n


# --- maximal inequality ----------------------------------------------------

def maximal_threshold(t, T, delta, sigma2=1.0):
    """Level ``sqrt(2 sigma2 / t * log(T / (delta t)))`` that the running mean
    of a sub-Gaussian martingale is unlikely to reach at any ``t <= T``.

    ``delta`` may be anywhere in (0, 1] here; the crossing bound itself needs
    ``delta <= 0.2``.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 1) or np.any(t_arr > T):
        raise DomainError(f"need 1 <= t <= T, got t={t}, T={T}")
    if not 0.0 < delta <= 1.0:
        raise DomainError(f"delta must lie in (0, 1], got {delta}")
    if not sigma2 > 0:
        raise DomainError("sigma2 must be > 0")
    out = np.sqrt(2.0 * sigma2 / t_arr * np.maximum(np.log(T / (delta * t_arr)), 0.0))
    return float(out) if out.ndim == 0 else out


def crossing_probability_bound(delta: float) -> float:
    """``6 delta sqrt(log(1/delta))``, valid for ``delta`` in (0, 0.2]."""
    if not 0.0 < delta <= 0.2:
        raise DomainError(f"crossing bound needs delta in (0, 0.2], got {delta}")
    return 6.0 * delta * math.sqrt(math.log(1.0 / delta))


def asymptotic_crossing_constant() -> float:
    """Leading constant ``sqrt(e/8)`` of the small-delta refinement.
    Informational only."""
    return math.sqrt(math.e / 8.0)


def mc_crossing_probabilities(spec: MartingaleSpec, deltas, trials: int, rng) -> list[McEstimate]:
    """Crossing frequencies for several ``delta`` on one shared set of paths."""
    _check_trials(trials)
    bounds = [crossing_probability_bound(d) for d in deltas]
    t = np.arange(1, spec.horizon + 1)
    levels = [maximal_threshold(t, spec.horizon, d, spec.sigma2) for d in deltas]
    hits = [0] * len(levels)
    for means in _running_means(spec, rng, trials):
        for j, level in enumerate(levels):
            hits[j] += int(np.count_nonzero(np.any(means >= level, axis=1)))
    return [_estimate(h, trials, b) for h, b in zip(hits, bounds)]


def mc_crossing_probability(spec: MartingaleSpec, delta: float, trials: int, rng) -> McEstimate:
    return mc_crossing_probabilities(spec, [delta], trials, rng)[0]


# --- interval inequality ---------------------------------------------------

def phi(x):
    """``(1 + x + 2 sqrt x) / (4 sqrt x)``; equals 1 at ``x = 1`` and grows
    slowly, so an interval ``[T1, T2]`` costs a factor ``phi(T2/T1)``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 1):
        raise DomainError("phi is used for ratios x >= 1")
    r = np.sqrt(x_arr)
    out = (1.0 + x_arr + 2.0 * r) / (4.0 * r)
    return float(out) if out.ndim == 0 else out


def interval_threshold(t, T1, T2, delta, sigma2=1.0):
    """Level ``sqrt(2 sigma2 / t * log(1/delta) * phi(T2/T1))``; the running
    mean exceeds it somewhere in ``[T1, T2]`` with probability at most
    ``delta``."""
    if not 1 <= T1 <= T2:
        raise DomainError(f"need 1 <= T1 <= T2, got {T1}, {T2}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if not sigma2 > 0:
        raise DomainError("sigma2 must be > 0")
    t_arr = np.asarray(t, dtype=float)
    out = np.sqrt(2.0 * sigma2 / t_arr * math.log(1.0 / delta) * phi(T2 / T1))
    return float(out) if out.ndim == 0 else out


def mc_interval_crossings(spec: MartingaleSpec, T1: int, deltas, trials: int, rng) -> list[McEstimate]:
    """Crossing frequencies over ``[T1, spec.horizon]`` for several ``delta``."""
    _check_trials(trials)
    T2 = spec.horizon
    t = np.arange(T1, T2 + 1)
    levels = [interval_threshold(t, T1, T2, d, spec.sigma2) for d in deltas]
    hits = [0] * len(levels)
    for means in _running_means(spec, rng, trials):
        window = means[:, T1 - 1:]
        for j, level in enumerate(levels):
            hits[j] += int(np.count_nonzero(np.any(window >= level, axis=1)))
    return [_estimate(h, trials, d) for h, d in zip(hits, deltas)]


# --- Bernoulli sums --------------------------------------------------------

def bernoulli_kl(x: float, p: float) -> float:
    """Relative entropy between Bernoulli(x) and Bernoulli(p)."""
    if not 0.0 <= x <= 1.0 or not 0.0 < p < 1.0:
        raise DomainError(f"need x in [0, 1] and p in (0, 1), got {x}, {p}")
    out = 0.0
    if x > 0:
        out += x * math.log(x / p)
    if x < 1:
        out += (1.0 - x) * math.log((1.0 - x) / (1.0 - p))
    return out


def binomial_lower_tail_bound(n: int, p_bar: float, alpha: float, form: str = "kl") -> float:
    """Bound on ``P(S_n - n p_bar <= -n alpha)`` for a sum of ``n`` independent
    Bernoulli variables with average mean ``p_bar``.

    ``form="kl"`` is the Chernoff bound ``exp(-n kl(p_bar - alpha, p_bar))``;
    ``form="gaussian"`` is the weaker ``exp(-n alpha^2 / (2 p(1-p)))``, valid
    for ``p_bar <= 1/2``.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if not 0.0 < p_bar < 1.0:
        raise DomainError(f"p_bar must lie in (0, 1), got {p_bar}")
    if alpha < 0:
        raise DomainError("alpha must be >= 0")
    if form == "gaussian":
        if p_bar > 0.5:
            raise DomainError("the Gaussian form needs p_bar <= 1/2")
        return math.exp(-n * alpha**2 / (2.0 * p_bar * (1.0 - p_bar)))
    if form != "kl":
        raise DomainError(f"unknown form {form!r}")
    if alpha > p_bar:
        return 0.0  # the sum cannot go negative
    return math.exp(-n * bernoulli_kl(p_bar - alpha, p_bar))


def mc_binomial_lower_tail(p_vector, alpha: float, trials: int, rng) -> McEstimate:
    """Tail frequency of a heterogeneous Bernoulli sum against the KL bound
    at the average mean."""
    _check_trials(trials)
    p = np.asarray(p_vector, dtype=float)
    n = p.size
    p_bar = float(p.mean())
    bound = binomial_lower_tail_bound(n, p_bar, alpha)
    chunk = max(1, _CHUNK_CELLS // n)
    hits = 0
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        sums = np.count_nonzero(rng.random((m, n)) < p, axis=1)
        hits += int(np.count_nonzero(sums - n * p_bar <= -n * alpha))
        done += m
    return _estimate(hits, trials, bound)


def binary_t2_threshold(p: float, t: int, C: float) -> float:
    """Level ``C log t - p t + sqrt(5 p t log t)`` for ``Y = C log t - sum Z_s``."""
    if t < 2:
        raise DomainError("need t >= 2")
    return C * math.log(t) - p * t + math.sqrt(5.0 * p * t * math.log(t))


def binary_t2_check(p: float, t: int, C: float, trials: int, rng) -> McEstimate:
    """Frequency of ``Y >= binary_t2_threshold`` for ``Z_s ~ Bernoulli(p)``
    against the bound ``1/t^2``.

    The event is evaluated as ``sum Z_s <= p t - sqrt(5 p t log t)``, which is
    the same event without the ``C log t`` cancellation.  ``p = 0`` is
    rejected: the event then holds with equality, surely.
    """
    _check_trials(trials)
    if not 0.0 < p <= 1.0:
        raise DomainError(f"p must lie in (0, 1], got {p}")
    if t < 2:
        raise DomainError("need t >= 2")
    cut = p * t - math.sqrt(5.0 * p * t * math.log(t))
    sums = rng.binomial(t, p, size=trials)
    return _estimate(int(np.count_nonzero(sums <= cut)), trials, 1.0 / t**2)


# --- suite -------------------------------------------------------------------

SUITE_CHECKS = ("maximal", "interval", "binomial", "binary_t2")
SUITE_COLUMNS = ("check", "family", "T", "delta", "estimate", "stderr", "bound", "pass")


def run_concentration_suite(deltas=(0.2, 0.1, 0.05, 0.01), horizons=(100, 1000),
                            trials: int = 100_000, seed: int = 0,
                            checks=SUITE_CHECKS, families=FAMILIES) -> list[dict]:
    """Run every validator over the grid and return one row per check.

    Each (check, family, T) cell gets its own child seed, so rows do not
    depend on which other checks were selected.
    """
    unknown = set(checks) - set(SUITE_CHECKS)
    if unknown:
        raise DomainError(f"unknown checks {sorted(unknown)}")
    root = np.random.SeedSequence(seed)
    rows = []

    def gen(*key):
        return np.random.Generator(np.random.PCG64(
            np.random.SeedSequence(root.entropy, spawn_key=tuple(key))))

    def emit(check, family, T, delta, est):
        rows.append({"check": check, "family": family, "T": T, "delta": delta,
                     "estimate": est.estimate, "stderr": est.stderr, "bound": est.bound,
                     "pass": est.passed})

    for T in horizons:
        for fi, family in enumerate(FAMILIES):
            if family not in families:
                continue
            spec = MartingaleSpec(family, 1.0, T)
            if "maximal" in checks:
                for d, est in zip(deltas, mc_crossing_probabilities(spec, deltas, trials, gen(0, fi, T))):
                    emit("maximal", family, T, d, est)
            if "interval" in checks:
                ests = mc_interval_crossings(spec, max(1, T // 2), deltas, trials, gen(1, fi, T))
                for d, est in zip(deltas, ests):
                    emit("interval", family, T, d, est)
        if "binomial" in checks:
            # heterogeneous means averaging 0.3, deviation set where the
            # Gaussian form equals delta
            p_vec = np.linspace(0.1, 0.5, T)
            p_bar = float(p_vec.mean())
            for j, d in enumerate(deltas):
                alpha = math.sqrt(2.0 * p_bar * (1.0 - p_bar) * math.log(1.0 / d) / T)
                emit("binomial", BERNOULLI, T, d, mc_binomial_lower_tail(p_vec, alpha, trials, gen(2, j, T)))
        if "binary_t2" in checks:
            for j, p in enumerate((0.1, 0.5)):
                emit("binary_t2", f"p={p}", T, float("nan"), binary_t2_check(p, T, 1.0, trials, gen(3, j, T)))
    return rows
