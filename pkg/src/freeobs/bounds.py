"""Closed-form regret bounds and the special functions they rely on.

All calculators take a gap vector in any arm order (one zero for the best
arm) and sort it internally: the formulas rank arms by decreasing mean.
Probability vectors are aligned with the gap vector as given.  Logarithms are
natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

SUB_LOG_C = 8.0
SUB_LOG_C0 = 1.0 + math.pi**2 / 3.0


@dataclass(frozen=True)
class SubLogConstants:
    """Constants of the reference class: regret at most
    ``C sum(log T / gap) + C0 sum(gap)`` on every problem."""

    C: float = SUB_LOG_C
    C0: float = SUB_LOG_C0

    def __post_init__(self):
        if self.C <= 0 or self.C0 <= 0:
            raise DomainError("sub-logarithmic constants must be positive")


DEFAULT_CONSTS = SubLogConstants()


@dataclass(frozen=True)
class BoundCurve:
    kind: str
    stages: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.stages) != len(self.values):
            raise ValueError("stages and values must have the same length")
        if np.any(np.diff(self.stages) <= 0):
            raise ValueError("stages must be strictly increasing")


def _gaps(gaps) -> np.ndarray:
    g = np.asarray(gaps, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise DomainError("need a gap vector with at least two arms")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise DomainError(f"gaps must be finite and non-negative, got {g}")
    if np.count_nonzero(g == 0) != 1:
        raise DomainError("exactly one arm must have a zero gap; sub-optimal arms need gap > 0")
    return g


def _sorted(gaps, p=None):
    g = _gaps(gaps)
    order = np.argsort(g, kind="stable")
    if p is None:
        return g[order], None
    p = np.asarray(p, dtype=float)
    if p.shape != g.shape:
        raise DomainError("probability vector and gaps must have the same length")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise DomainError("p must be a probability vector")
    return g[order], p[order]


def _check_eps(eps: float) -> None:
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"epsilon must lie in [0, 1], got {eps}")


def _other_sums(g: np.ndarray, i: int, delta: float):
    others = np.delete(g, i)
    return float(np.sum(delta / (delta + others))), float(np.sum(1.0 / (delta + others)))


def _eta(T, g, i, delta, consts):
    T = np.asarray(T, dtype=float)
    s_ratio, s_inv = _other_sums(g, i, delta)
    c_k = consts.C0 * g.sum()
    c_delta = float(np.sum(1.0 / g[g > 0]))
    log_t = np.log(T)
    first = -(c_k + consts.C * c_delta * log_t) / T * np.log(
        T * delta**2 / (c_k * delta + consts.C * log_t * s_ratio))
    return first - np.log1p(c_k / (consts.C * log_t * s_inv))


def _h_main(T, g, i, delta, consts):
    T = np.asarray(T, dtype=float)
    s_ratio, _ = _other_sums(g, i, delta)
    return np.log(T * delta**2 / (2.0 * consts.C * np.log(T) * s_ratio))


def _h(T, g, i, delta, consts):
    return _h_main(T, g, i, delta, consts) + _eta(T, g, i, delta, consts)


def _constraint_ratios(T, g, i, delta, consts):
    """``(x, y)``: the share of stages a sub-logarithmic algorithm may spend
    off the best arm, and the share it may spend on it under the alternative
    problem.  The requirement ``h_i`` carries information only when both are
    below 1."""
    T = np.asarray(T, dtype=float)
    _, s_inv = _other_sums(g, i, delta)
    c_k = consts.C0 * g.sum()
    c_delta = float(np.sum(1.0 / g[g > 0]))
    log_t = np.log(T)
    return (c_k + consts.C * c_delta * log_t) / T, (c_k + consts.C * s_inv * log_t) / (T * delta)


def _informative(T, g, i, delta, consts):
    x, y = _constraint_ratios(T, g, i, delta, consts)
    return (x < 1.0) & (y < 1.0)


def _h_eff(T, g, i, delta, consts):
    """``h_i`` where the constraint is informative, 0 elsewhere."""
    T = np.asarray(T, dtype=float)
    ok = _informative(T, g, i, delta, consts)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(ok, _h(np.where(ok, T, 3.0), g, i, delta, consts), 0.0)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=4096)
def _first_informative(g, i, delta, consts) -> int:
    """Smallest integer stage >= 3 from which ``h_i`` is informative (both
    ratios decrease for ``T >= e``)."""
    g = np.asarray(g)
    if _informative(3.0, g, i, delta, consts):
        return 3
    lo, hi = 3, 6
    while not _informative(float(hi), g, i, delta, consts):
        lo, hi = hi, hi * 2
        if hi > 1e18:
            raise DomainError("the sub-logarithmic constraint never becomes informative")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _informative(float(mid), g, i, delta, consts):
            hi = mid
        else:
            lo = mid
    return hi


def first_informative_stage(gaps, i: int, Delta=None, consts: SubLogConstants = DEFAULT_CONSTS) -> int:
    """Smallest stage from which ``h_i`` carries information; below it the
    correction ``eta_i`` dominates and ``h_i`` is neither meaningful nor
    increasing."""
    g = _gaps(gaps)
    delta = _check_h_args(3, g, i, Delta)
    return _first_informative(tuple(g), i, delta, consts)


def _check_h_args(T, g, i, delta):
    if np.any(np.asarray(T) < 3):
        raise DomainError("h_i and eta_i are defined for T >= 3")
    if not 0 <= i < g.size:
        raise DomainError(f"arm index {i} out of range")
    if delta is None:
        delta = g[i]
    if delta <= 0:
        raise DomainError("the alternative gap Delta must be > 0")
    return float(delta)


def eta_i(T, gaps, i: int, Delta=None, consts: SubLogConstants = DEFAULT_CONSTS):
    """Correction term of ``h_i``; vanishes like ``1/log T``.

    ``i`` indexes ``gaps`` as given; ``Delta`` defaults to ``gaps[i]``.
    """
    g = _gaps(gaps)
    delta = _check_h_args(T, g, i, Delta)
    return _eta(T, g, i, delta, consts)


def h_i(T, gaps, i: int, Delta=None, consts: SubLogConstants = DEFAULT_CONSTS,
        include_eta: bool = True):
    """Information requirement ``h_i(T)`` of arm ``i``: any sub-logarithmic
    algorithm observes it at least ``2 h_i(T) / (Delta + gap_i)^2`` times.
    With ``include_eta=False`` only the leading logarithm is returned."""
    g = _gaps(gaps)
    delta = _check_h_args(T, g, i, Delta)
    main = _h_main(T, g, i, delta, consts)
    return main + _eta(T, g, i, delta, consts) if include_eta else main


def lb_passive_simple(T, gaps, eps: float, p, consts: SubLogConstants = DEFAULT_CONSTS) -> float:
    """Fixed-horizon passive lower bound; vanishes once free observations
    alone could cover every information requirement."""
    _check_eps(eps)
    if T < 3:
        raise DomainError("T must be >= 3")
    g, p = _sorted(gaps, p)
    total = 0.0
    for i in range(1, g.size):
        d = g[i]
        total += max(0.0, _h_eff(T, g, i, d, consts) / (2 * d) - eps * p[i] * T * d)
    return total


def passive_switch_stage(gap: float, eps: float, p_i: float) -> float:
    rate = 2.0 * eps * p_i * gap**2
    return math.inf if rate == 0 else 1.0 / rate


def passive_two_regime(T, gaps, i: int, eps: float, p_i: float,
                       consts: SubLogConstants = DEFAULT_CONSTS) -> float:
    """Closed-form per-arm term ``r_T``: ``h_i(T) - 2 eps p_i gap_i^2 T`` up to
    the switch stage ``1 / (2 eps p_i gap_i^2)``, frozen at its switch-stage
    value afterwards.  ``i`` indexes ``gaps`` as given.  No clamping; the two
    branches coincide at the switch stage."""
    g = _gaps(gaps)
    d = float(g[i])
    if d <= 0 or T < 3:
        raise DomainError("need a sub-optimal arm and T >= 3")
    rate = 2.0 * eps * p_i * d**2
    switch = passive_switch_stage(d, eps, p_i)
    if T <= switch:
        return float(_h(T, g, i, d, consts)) - rate * T
    s_ratio, _ = _other_sums(g, i, d)
    return (math.log(1.0 / eps / (4.0 * consts.C * p_i * s_ratio))
            - math.log(math.log(switch)) + float(_eta(switch, g, i, d, consts)) - 1.0)


@lru_cache(maxsize=4096)
def _passive_peak(g, i, rate, consts):
    """Stage maximizing ``h_i(t) - rate t`` over the informative stages, or
    ``inf`` when the maximum is not reached (``rate = 0``)."""
    g = np.asarray(g)
    d = g[i]
    start = float(_first_informative(tuple(g), i, d, consts))
    if rate == 0:
        return math.inf

    def slope(t):
        step = t * 1e-6
        return (_h(t + step, g, i, d, consts) - _h(t - step, g, i, d, consts)) / (2 * step) - rate

    if slope(start) <= 0:
        return start
    lo, hi = start, max(start, 1.0 / rate) * 2.0
    while slope(hi) > 0:
        lo, hi = hi, hi * 2.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-13:
            break
    return lo


def _passive_sup(T, g, p_i, i, eps, consts):
    """``max(0, sup_{t <= T} h_i(t) - 2 eps p_i gap_i^2 t)`` over informative
    stages: the per-arm term of the horizon-monotone bound."""
    d = g[i]
    start = _first_informative(tuple(g), i, d, consts)
    if T < start:
        return 0.0
    rate = 2.0 * eps * p_i * d**2
    t = min(float(T), _passive_peak(tuple(g), i, rate, consts))
    return max(0.0, float(_h(t, g, i, d, consts)) - rate * t)


def lb_passive_monotone(T, gaps, eps: float, p, consts: SubLogConstants = DEFAULT_CONSTS) -> float:
    """Horizon-monotone passive lower bound.

    Each arm contributes ``sup_{t <= T} (h_i(t) - 2 eps p_i gap_i^2 t) / (2 gap_i)``:
    logarithmic in ``T`` until close to ``1 / (2 eps p_i gap_i^2)``, then
    frozen at a value of order ``log(1/eps) / gap_i``.  The supremum is never
    below :func:`passive_two_regime` and is non-decreasing by construction.
    """
    _check_eps(eps)
    if T < 3:
        raise DomainError("T must be >= 3")
    g, p = _sorted(gaps, p)
    return sum(_passive_sup(T, g, p[i], i, eps, consts) / (2 * g[i]) for i in range(1, g.size))


def optimal_passive_distribution(gaps) -> np.ndarray:
    """Observation weights proportional to ``1/gap`` on sub-optimal arms,
    zero on the best arm."""
    g = _gaps(gaps)
    w = np.where(g > 0, 1.0 / np.where(g > 0, g, 1.0), 0.0)
    return w / w.sum()


def inverse_square_distribution(gaps) -> np.ndarray:
    g = _gaps(gaps)
    w = np.where(g > 0, 1.0 / np.where(g > 0, g, 1.0) ** 2, 0.0)
    return w / w.sum()


def _requirements(T, g, consts):
    """Observations ``h_j(T) / (2 gap_j^2)`` needed by each sub-optimal arm
    (negative requirements dropped), for arms sorted by gap."""
    h = np.array([0.0] + [max(0.0, _h_eff(T, g, j, g[j], consts)) for j in range(1, g.size)])
    req = np.zeros_like(h)
    req[1:] = h[1:] / (2 * g[1:] ** 2)
    return h, req


def lb_active_simple(T, gaps, eps: float, consts: SubLogConstants = DEFAULT_CONSTS) -> float:
    """Fixed-horizon active lower bound: free observations go to the worst
    arms first, pulls cover the rest."""
    _check_eps(eps)
    if T < 3:
        raise DomainError("T must be >= 3")
    g, _ = _sorted(gaps)
    h, req = _requirements(T, g, consts)
    budget = eps * T
    K = g.size
    # tail[i] = sum_{j > i} req_j
    tail = np.concatenate([np.cumsum(req[::-1])[::-1][1:], [0.0]])
    k = next(i for i in range(1, K) if tail[i] <= budget)
    value = float(np.sum(h[1:k + 1] / (2 * g[1:k + 1]))) - g[k] * (budget - tail[k])
    return max(0.0, value)


def _t_k(g, k, eps, consts):
    return _t_k_cached(tuple(g), k, eps, consts)


@lru_cache(maxsize=4096)
def _t_k_cached(g, k, eps, consts):
    """Last stage at which free observations cannot yet cover arms ``k+1..K``
    (0-based sorted index ``k``), or ``None`` if there is no such stage."""
    g = np.asarray(g)
    tail = range(k + 1, g.size)

    def shortfall(t):
        t = np.asarray(t, dtype=float)
        # the definition uses h_j itself, informative or not
        need = sum(np.maximum(_h(t, g, j, g[j], consts), 0.0) / (2 * g[j] ** 2) for j in tail)
        return eps * t - need

    grid = np.unique(np.floor(np.logspace(math.log10(3), 18, 3001)).astype(np.int64))
    neg = np.nonzero(shortfall(grid) < 0)[0]
    if neg.size == 0:
        return None
    last = neg[-1]
    if last == grid.size - 1:
        raise DomainError("switch stage beyond 1e18; epsilon too small")
    lo, hi = int(grid[last]), int(grid[last + 1])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if shortfall(mid) < 0:
            lo = mid
        else:
            hi = mid
    return lo


def active_switch_stages(gaps, eps: float, consts: SubLogConstants = DEFAULT_CONSTS) -> dict:
    """``{k: t_k}`` for ranks ``k = 2..K-1`` (1-based, by decreasing mean)."""
    _check_eps(eps)
    if eps == 0:
        raise DomainError("switch stages are infinite without free observations")
    g, _ = _sorted(gaps)
    return {k: _t_k(g, k - 1, eps, consts) for k in range(2, g.size)}


def _active_terms(g, k, eps, consts):
    """Per-arm brackets for rank ``k`` (1-based), arms of rank 2..k."""
    inv_sq = 1.0 / g[k:] ** 2
    stage = float(np.sum(inv_sq / 2.0)) / eps
    out = []
    for i in range(1, k):
        d = g[i]
        s_ratio, _ = _other_sums(g, i, d)
        lead = math.log(float(np.sum(d**2 * inv_sq)) / eps / (4.0 * consts.C * s_ratio))
        if stage < 3.0 or not _informative(stage, g, i, d, consts):
            # the requirement carries no information at that stage
            out.append((lead, -math.inf))
            continue
        rest = -math.log(math.log(stage)) + float(_eta(stage, g, i, d, consts))
        out.append((lead, lead + rest))
    return stage, out


def lb_active_monotone(T, gaps, eps: float, consts: SubLogConstants = DEFAULT_CONSTS) -> float:
    """Horizon-monotone active lower bound: maximum over the ranks ``k`` whose
    switch stage ``t_k`` has passed of ``sum_{i<=k} B_{i,k} / gap_i``."""
    _check_eps(eps)
    if T < 3:
        raise DomainError("T must be >= 3")
    if eps == 0:
        return 0.0
    g, _ = _sorted(gaps)
    best = 0.0
    for k in range(2, g.size):
        t_k = _t_k(g, k - 1, eps, consts)
        if t_k is not None and t_k > T:
            continue
        _, terms = _active_terms(g, k, eps, consts)
        value = sum(max(0.0, full) / g[i + 1] for i, (_, full) in enumerate(terms))
        best = max(best, value)
    return best


def lb_active_leading_terms(gaps, eps: float, consts: SubLogConstants = DEFAULT_CONSTS) -> dict:
    """``{k: sum_i lead_{i,k} / gap_i}`` without the log-log and correction terms."""
    g, _ = _sorted(gaps)
    return {k: sum(lead / g[i + 1] for i, (lead, _) in enumerate(_active_terms(g, k, eps, consts)[1]))
            for k in range(2, g.size)}


def lb_active_alternative(T, gaps, eps: float, consts: SubLogConstants = DEFAULT_CONSTS) -> float:
    """Weaker active lower bound obtained as if every arm were observed at
    each free-observation stage (its ``log K`` loss is known to be loose)."""
    _check_eps(eps)
    g, _ = _sorted(gaps)
    K = g.size
    if T < 3:
        raise DomainError("T must be >= 3")
    return sum(_passive_sup(T, g, 1.0, i, eps, consts) / (2 * g[i]) for i in range(1, K))


@dataclass(frozen=True)
class PassiveUpperBound:
    log_coefficient: float
    finite: float

    def at(self, T) -> np.ndarray:
        return np.minimum(self.log_coefficient * np.log(T), self.finite)


def ucb_passive_terms(gaps, eps_p):
    """Per-arm pieces of the horizon-free UCB bound for sub-optimal arms:
    ``(24/gap) log(50/(eps p))`` and
    ``(24/gap) max(log(1/(e gap^2)), log log(20/(eps p)))``."""
    g = np.asarray(gaps, dtype=float)
    ep = np.asarray(eps_p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        first = 24.0 / g * np.log(50.0 / ep)
        # log log is undefined once eps p >= 20; the other branch then applies
        loglog = np.where(ep < 20.0, np.log(np.log(20.0 / ep)), -np.inf)
        second = 24.0 / g * np.maximum(np.log(1.0 / (math.e * g**2)), loglog)
    return first, second


def ub_ucb_passive(gaps, eps: float, p) -> PassiveUpperBound:
    """Both UCB-with-passive-observations guarantees: ``coef * log T`` and a
    horizon-free bound (infinite if some sub-optimal arm is never observed
    freely)."""
    if not 0.0 < eps <= 1.0:
        raise DomainError("epsilon must lie in (0, 1]")
    g, p = _sorted(gaps, p)
    g, p = g[1:], p[1:]
    coef = float(np.sum(24.0 / g))
    if np.any(p == 0):
        return PassiveUpperBound(coef, math.inf)
    first, second = ucb_passive_terms(g, eps * p)
    return PassiveUpperBound(coef, float(np.sum(first) + np.sum(second)))


def complexity_H(gaps, rank: int, rho: float) -> float:
    """``rank/gap^2 + sum over worse arms j of 1/(gap^(2(1-rho)) gap_j^(2 rho))``
    for the arm of the given rank (1-based, 2 = second best)."""
    if not 0.5 <= rho <= 1.0:
        raise DomainError("rho must lie in [1/2, 1]")
    g, _ = _sorted(gaps)
    if not 2 <= rank <= g.size:
        raise DomainError(f"rank must lie in 2..{g.size}")
    d = g[rank - 1]
    worse = g[rank:]
    return rank / d**2 + float(np.sum(1.0 / (d ** (2 * (1 - rho)) * worse ** (2 * rho))))


H_i_rho = complexity_H


@dataclass(frozen=True)
class ActiveUpperBound:
    main: float
    loglog_term: float

    @property
    def total(self) -> float:
        return self.main + self.loglog_term


def ub_active(gaps, eps: float, rho: float = 0.5, C_eta: float = 1.0) -> ActiveUpperBound:
    """Guarantee of the epoch-based active algorithm (stated for rewards in
    [0, 1]).  ``C_eta`` has no published value; the default only fixes the
    shape.  The log-log remainder is reported with unit constant."""
    if not 0.0 < eps <= 1.0:
        raise DomainError("epsilon must lie in (0, 1]")
    g, _ = _sorted(gaps)
    K = g.size
    main = 0.0
    rest = 0.0
    for rank in range(2, K + 1):
        d = g[rank - 1]
        main += 4.0 / d * max(math.log(1.0 / eps), 0.5 * math.log(complexity_H(g, rank, rho)))
        rest += (math.log(math.log(complexity_H(g, rank, 1.0) / eps))) ** 2 / d
    return ActiveUpperBound(C_eta * main + 51.0 * K, rest)


def epsilon_star(K: int, Delta: float, T: float) -> float:
    """Free-observation rate above which free samples matter by stage ``T``."""
    if Delta <= 0 or T <= 0:
        raise DomainError("Delta and T must be positive")
    return K / (T * Delta**2)


def lambert_w(x: float, tol: float = 1e-12) -> float:
    """Principal branch of the Lambert W function (``W(x) exp(W(x)) = x``),
    by Halley iteration."""
    x = float(x)
    branch = -1.0 / math.e
    if x < branch:
        if x > branch - 1e-15:
            return -1.0
        raise DomainError(f"W is real only for x >= -1/e, got {x}")
    if x == 0.0:
        return 0.0
    if x == math.inf:
        return math.inf
    if x < -0.25:
        # series around the branch point
        q = math.sqrt(max(2.0 * (math.e * x + 1.0), 0.0))
        w = -1.0 + q - q * q / 3.0 + 11.0 / 72.0 * q**3 - 43.0 / 540.0 * q**4
        if q < 1e-4:
            return w
    elif x < 3.0:
        w = math.log1p(x) * (1.0 - math.log1p(math.log1p(x)) / (2.0 + math.log1p(x)))
    else:
        lx = math.log(x)
        w = lx - math.log(lx)
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= tol * (1.0 + abs(w)):
            break
    return w


def lambert_w_minus1_lb(u: float) -> float:
    """Lower bound ``-1 - sqrt(2u) - u`` on ``W_{-1}(-exp(-u-1))``."""
    if u <= 0:
        raise DomainError("u must be > 0")
    return -1.0 - math.sqrt(2.0 * u) - u


def bound_table(stages, gaps, eps: float, p, consts: SubLogConstants = DEFAULT_CONSTS,
                rho: float = 0.5, C_eta: float = 1.0) -> dict:
    """Every bound on a grid of horizons, keyed by CSV column name.

    Columns: ``lemma2`` and ``theorem1`` are the fixed-horizon and monotone
    passive lower bounds, ``lemma3`` and ``theorem2`` their active
    counterparts, ``ub_theorem3_*`` the two UCB-passive upper bounds and
    ``ub_theorem4`` the active-algorithm upper bound.  The names are the
    published CSV schema.
    """
    stages = np.asarray(stages, dtype=np.int64)
    ub3 = ub_ucb_passive(gaps, eps, p) if eps > 0 else PassiveUpperBound(
        float(np.sum(24.0 / _sorted(gaps)[0][1:])), math.inf)
    ub4 = ub_active(gaps, eps, rho, C_eta).total if eps > 0 else math.inf
    rows = {"T": stages, "lemma2": [], "theorem1": [], "lemma3": [], "theorem2": [],
            "ub_theorem3_logT": [], "ub_theorem3_finite": [], "ub_theorem4": []}
    for T in stages:
        T = int(T)
        ok = T >= 3
        rows["lemma2"].append(lb_passive_simple(T, gaps, eps, p, consts) if ok else 0.0)
        rows["theorem1"].append(lb_passive_monotone(T, gaps, eps, p, consts) if ok else 0.0)
        rows["lemma3"].append(lb_active_simple(T, gaps, eps, consts) if ok else 0.0)
        rows["theorem2"].append(lb_active_monotone(T, gaps, eps, consts) if ok else 0.0)
        rows["ub_theorem3_logT"].append(ub3.log_coefficient * math.log(T))
        rows["ub_theorem3_finite"].append(ub3.finite)
        rows["ub_theorem4"].append(ub4)
    return {k: np.asarray(v) for k, v in rows.items()}
