"""JSON experiment configuration.

A config file describes one experiment and, optionally, a list of named
variants that override some of its fields::

    {
      "schema_version": 1,
      "name": "passive_distributions",
      "arms": [{"kind": "gaussian", "mean": 2.0}, {"kind": "gaussian", "mean": 1.8}],
      "schedule": {"kind": "deterministic", "epsilon": 0.1},
      "observer": {"kind": "passive", "p": "uniform"},
      "policy": {"name": "ucb_passive", "params": {}},
      "horizon": 10000,
      "replications": 300,
      "seed": 0,
      "checkpoints": {"log_spaced": 100},
      "variants": [{"name": "optimal", "observer": {"kind": "passive", "p": "optimal"}}]
    }

Unknown fields are rejected with the path of the offending field.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, replace

from .. import bounds
from ..core import Bernoulli, Gaussian, PointMass, ProblemInstance, make_instance
from ..environments import (ACTIVE, DETERMINISTIC, NONE, PASSIVE, STATIC_RANDOM, FreeObsSchedule,
                            ObserverMode, log_spaced_checkpoints)
from ..errors import ConfigError, FreeObsError
from ..policies import (EVERY_C_ROUNDS, EVERY_ROUND, OCUCB_SUM_VARIANTS, POLICIES, POWERS_OF_TWO,
                        Cadence, Policy)

SCHEMA_VERSION = 1
TOP_FIELDS = {"schema_version", "name", "arms", "schedule", "observer", "policy", "horizon",
              "replications", "seed", "checkpoints", "variants"}
VARIANT_FIELDS = TOP_FIELDS - {"schema_version", "variants"}
POLICY_PARAMS = {
    "ftl_robin": set(),
    "ucb_passive": {"exploration"},
    "ucb_baseline": {"exploration"},
    "ucb1_double": {"exploration"},
    "active": {"alpha", "rho", "eta", "cadence", "epoch_base", "share_info", "variant"},
}
NAMED_DISTRIBUTIONS = ("uniform", "optimal", "inverse_square")
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class PolicySpec:
    name: str
    params: dict = field(default_factory=dict)

    def build(self) -> Policy:
        params = dict(self.params)
        if self.name == "active" and "cadence" in params:
            params["cadence"] = Cadence(**params["cadence"])
        return POLICIES[self.name](**params)


@dataclass(frozen=True)
class ExperimentConfig:
    """One fully resolved experiment."""

    name: str
    instance: ProblemInstance
    schedule: FreeObsSchedule
    observer: ObserverMode
    policy: PolicySpec
    horizon: int
    replications: int = 1
    seed: int = 0
    checkpoints: tuple = ()

    def __post_init__(self):
        if not self.checkpoints:
            object.__setattr__(self, "checkpoints", tuple(log_spaced_checkpoints(self.horizon)))
        cps = self.checkpoints
        if any(b <= a for a, b in zip(cps, cps[1:])) or cps[0] < 1 or cps[-1] > self.horizon:
            raise ConfigError("checkpoints", "must be strictly increasing within [1, horizon]")
        if self.replications < 1:
            raise ConfigError("replications", "must be >= 1")

    def with_changes(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


# --- parsing -------------------------------------------------------------------

def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(path, message)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _no_unknown(obj: dict, allowed, path: str) -> None:
    _expect(isinstance(obj, dict), path, "must be an object")
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise ConfigError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")


def _required(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    return obj[key]


def _parse_arm(obj, path):
    _expect(isinstance(obj, dict), path, "must be an object")
    kind = _required(obj, "kind", path)
    try:
        if kind == "gaussian":
            _no_unknown(obj, {"kind", "mean", "variance"}, path)
            mean = _required(obj, "mean", path)
            var = obj.get("variance", 1.0)
            _expect(_is_number(mean) and _is_number(var), path, "mean and variance must be numbers")
            return Gaussian(float(mean), float(var))
        if kind == "bernoulli":
            _no_unknown(obj, {"kind", "mean"}, path)
            mean = _required(obj, "mean", path)
            _expect(_is_number(mean), f"{path}.mean", "must be a number")
            return Bernoulli(float(mean))
        if kind == "point_mass":
            _no_unknown(obj, {"kind", "value"}, path)
            value = _required(obj, "value", path)
            _expect(_is_number(value), f"{path}.value", "must be a number")
            return PointMass(float(value))
    except FreeObsError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.kind", f"unknown arm kind {kind!r}")


def _parse_instance(arms, path="arms") -> ProblemInstance:
    _expect(isinstance(arms, list), path, "must be a list of arm objects")
    parsed = [_parse_arm(a, f"{path}[{i}]") for i, a in enumerate(arms)]
    try:
        return make_instance(parsed)
    except FreeObsError as exc:
        raise ConfigError(path, str(exc)) from None


def _parse_schedule(obj, path="schedule") -> FreeObsSchedule:
    _no_unknown(obj, {"kind", "epsilon"}, path)
    kind = _required(obj, "kind", path)
    _expect(kind in (NONE, DETERMINISTIC, STATIC_RANDOM), f"{path}.kind",
            f"must be one of none, deterministic, static_random; got {kind!r}")
    if kind == NONE:
        return FreeObsSchedule.none()
    eps = _required(obj, "epsilon", path)
    _expect(_is_number(eps) and 0 < eps <= 1, f"{path}.epsilon", "must be a number in (0, 1]")
    return FreeObsSchedule(kind, float(eps))


def resolve_distribution(p, instance: ProblemInstance, path="observer.p") -> tuple:
    """A probability vector from a list or one of the named distributions."""
    K = instance.n_arms
    if isinstance(p, str):
        _expect(p in NAMED_DISTRIBUTIONS, path, f"must be a list or one of {NAMED_DISTRIBUTIONS}")
        if p == "uniform":
            return tuple([1.0 / K] * K)
        try:
            f = bounds.optimal_passive_distribution if p == "optimal" else bounds.inverse_square_distribution
            return tuple(float(x) for x in f(instance.gaps))
        except FreeObsError as exc:
            raise ConfigError(path, str(exc)) from None
    _expect(isinstance(p, list) and all(_is_number(x) for x in p), path,
            "must be a list of numbers or a named distribution")
    _expect(len(p) == K, path, f"needs {K} entries, got {len(p)}")
    return tuple(float(x) for x in p)


def _parse_observer(obj, instance, path="observer") -> ObserverMode:
    _no_unknown(obj, {"kind", "p"}, path)
    kind = _required(obj, "kind", path)
    if kind == ACTIVE:
        _expect("p" not in obj, f"{path}.p", "an active observer takes no distribution")
        return ObserverMode.active()
    _expect(kind == PASSIVE, f"{path}.kind", f"must be passive or active; got {kind!r}")
    p = resolve_distribution(_required(obj, "p", path), instance, f"{path}.p")
    try:
        return ObserverMode.passive(p)
    except FreeObsError as exc:
        raise ConfigError(f"{path}.p", str(exc)) from None


def _parse_policy(obj, path="policy") -> PolicySpec:
    _no_unknown(obj, {"name", "params"}, path)
    name = _required(obj, "name", path)
    _expect(name in POLICY_PARAMS, f"{path}.name", f"unknown policy {name!r}; choose from {sorted(POLICY_PARAMS)}")
    params = obj.get("params", {})
    _no_unknown(params, POLICY_PARAMS[name], f"{path}.params")
    params = copy.deepcopy(params)
    for key, value in params.items():
        p = f"{path}.params.{key}"
        if key == "cadence":
            _no_unknown(value, {"kind", "c"}, p)
            kind = _required(value, "kind", p)
            _expect(kind in (EVERY_ROUND, EVERY_C_ROUNDS, POWERS_OF_TWO), f"{p}.kind", f"unknown cadence {kind!r}")
            _expect(_is_int(value.get("c", 10)) and value.get("c", 10) >= 1, f"{p}.c", "must be an integer >= 1")
        elif key == "share_info":
            _expect(isinstance(value, bool), p, "must be true or false")
        elif key == "variant":
            _expect(value in OCUCB_SUM_VARIANTS, p, f"must be one of {sorted(OCUCB_SUM_VARIANTS)}")
        elif key == "epoch_base":
            _expect(_is_int(value) and value >= 2, p, "must be an integer >= 2")
        else:
            _expect(_is_number(value), p, "must be a number")
    spec = PolicySpec(name, params)
    try:
        spec.build()
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path}.params", str(exc)) from None
    return spec


def _parse_checkpoints(obj, horizon, path="checkpoints") -> tuple:
    if obj is None:
        return tuple(log_spaced_checkpoints(horizon))
    if isinstance(obj, dict):
        _no_unknown(obj, {"log_spaced"}, path)
        n = _required(obj, "log_spaced", path)
        _expect(_is_int(n) and n >= 1, f"{path}.log_spaced", "must be a positive integer")
        return tuple(log_spaced_checkpoints(horizon, n))
    _expect(isinstance(obj, list) and obj and all(_is_int(x) for x in obj), path,
            "must be a non-empty list of integers, an object {log_spaced: n} or null")
    _expect(all(b > a for a, b in zip(obj, obj[1:])), path, "must be strictly increasing")
    _expect(obj[0] >= 1 and obj[-1] <= horizon, path, f"must lie in [1, {horizon}]")
    return tuple(obj)


def _check_compatible(policy: PolicySpec, observer: ObserverMode, schedule: FreeObsSchedule, path="observer"):
    chooses = policy.build().requests_free
    if schedule.kind == NONE:
        return
    if chooses and observer.kind != ACTIVE:
        raise ConfigError(f"{path}.kind", f"policy {policy.name} chooses its free observations; use an active observer")
    if not chooses and observer.kind != PASSIVE:
        raise ConfigError(f"{path}.kind", f"policy {policy.name} does not choose free observations; use a passive observer")


def parse_config(obj: dict, name_default: str = "experiment") -> list[ExperimentConfig]:
    """Parse a config object into one resolved config per variant."""
    _no_unknown(obj, TOP_FIELDS, "")
    version = obj.get("schema_version", SCHEMA_VERSION)
    _expect(version == SCHEMA_VERSION, "schema_version", f"unsupported version {version!r}; expected {SCHEMA_VERSION}")
    variants = obj.get("variants")
    base = {k: v for k, v in obj.items() if k not in ("variants", "schema_version")}
    if variants is None:
        return [_parse_one(base, "", name_default)]
    _expect(isinstance(variants, list) and variants, "variants", "must be a non-empty list")
    out = []
    seen = set()
    for i, v in enumerate(variants):
        path = f"variants[{i}]"
        _no_unknown(v, VARIANT_FIELDS, path)
        name = _required(v, "name", path)
        _expect(isinstance(name, str) and name and "/" not in name, f"{path}.name", "must be a non-empty file-safe string")
        _expect(name not in seen, f"{path}.name", f"duplicate variant name {name!r}")
        seen.add(name)
        merged = dict(base)
        merged.update(v)
        out.append(_parse_one(merged, path, name_default, set(v)))
    return out


def _parse_one(obj: dict, origin: str, name_default: str, overrides=()) -> ExperimentConfig:
    def at(key):
        # fields supplied by a variant are reported under the variant's path
        return f"{origin}.{key}" if key in overrides else key

    name = obj.get("name", name_default)
    _expect(isinstance(name, str) and name and "/" not in name, at("name"), "must be a non-empty file-safe string")
    instance = _parse_instance(_required(obj, "arms", ""), at("arms"))
    schedule = _parse_schedule(_required(obj, "schedule", ""), at("schedule"))
    observer = _parse_observer(obj.get("observer", {"kind": ACTIVE}), instance, at("observer"))
    policy = _parse_policy(_required(obj, "policy", ""), at("policy"))
    _check_compatible(policy, observer, schedule, at("observer"))
    horizon = _required(obj, "horizon", "")
    _expect(_is_int(horizon) and horizon >= 1, at("horizon"), "must be an integer >= 1")
    reps = obj.get("replications", 1)
    _expect(_is_int(reps) and reps >= 1, at("replications"), "must be an integer >= 1")
    seed = obj.get("seed", 0)
    _expect(_is_int(seed) and 0 <= seed <= MAX_SEED, at("seed"), "must be an unsigned 64-bit integer")
    checkpoints = _parse_checkpoints(obj.get("checkpoints"), horizon, at("checkpoints"))
    return ExperimentConfig(name, instance, schedule, observer, policy, horizon, reps, seed, checkpoints)


def load_config(path) -> list[ExperimentConfig]:
    """Read and parse a JSON config file.  Any problem is a :class:`ConfigError`."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("--config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON: {exc}") from None
    stem = str(path).rsplit("/", 1)[-1].rsplit(".", 1)[0] or "experiment"
    return parse_config(obj, stem)
