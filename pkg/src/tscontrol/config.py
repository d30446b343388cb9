"""Scenario configuration: YAML schema, validation, sweep expansion.

A scenario file pins everything a run needs: the plant, the three stage
costs, the noise and prediction models, the controllers to execute, seeds,
and an optional sweep grid of dotted-path overrides. Validation happens on
load and again at every sweep point, so a bad grid value fails before any
solving starts, with the offending field named.
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field

import numpy as np
import yaml

from .noise import NoiseModel, PredictionModel
from .system import CostSpec, NormCost, QuadFloor, SystemSpec


class ConfigError(ValueError):
    pass


_CONTROLLER_TYPES = ("mrpc", "offline_opt", "zero_slow", "afhc", "fhc")


def _need(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing required field {where}.{key}")
    return mapping[key]


def _as_matrix(value, n: int | None, where: str) -> np.ndarray:
    if isinstance(value, (int, float)):
        value = [[float(value)]]
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where} is not a numeric matrix: {e}") from None
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError(f"{where} must be a square matrix, got shape {M.shape}")
    if n is not None and M.shape[0] != n:
        raise ConfigError(f"{where} must be {n}x{n}, got {M.shape[0]}x{M.shape[0]}")
    return M


def build_system(raw: dict) -> SystemSpec:
    sys_raw = _need(raw, "system", "scenario")
    if not isinstance(sys_raw, dict):
        raise ConfigError("system must be a mapping")
    A = _as_matrix(_need(sys_raw, "A", "system"), None, "system.A")
    n = A.shape[0]
    if "n" in sys_raw and int(sys_raw["n"]) != n:
        raise ConfigError(f"system.n={sys_raw['n']} contradicts system.A shape {A.shape}")
    Bf = _as_matrix(_need(sys_raw, "Bf", "system"), n, "system.Bf")
    Bs = _as_matrix(_need(sys_raw, "Bs", "system"), n, "system.Bs")
    T = _need(sys_raw, "T", "system")
    k = _need(sys_raw, "k", "system")
    if not isinstance(T, int) or T < 1:
        raise ConfigError(f"system.T must be a positive integer, got {T!r}")
    if not isinstance(k, int) or not 1 <= k <= T:
        raise ConfigError(f"system.k must be an integer in [1, T={T}], got {k!r}")
    try:
        return SystemSpec(A=A, Bf=Bf, Bs=Bs, T=T, k=k)
    except ValueError as e:
        raise ConfigError(f"system: {e}") from None


def _build_cost(raw, where: str):
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(f"{where} must be a mapping with a 'kind'")
    kind = raw["kind"]
    rest = {k: v for k, v in raw.items() if k != "kind"}
    try:
        if kind == "norm":
            p = rest.pop("p")
            p = float("inf") if p in ("inf", "Inf") else float(p)
            return NormCost(p=p, weight=float(rest.pop("weight", 1.0)), **rest)
        if kind == "quad_floor":
            theta = rest.pop("theta", 0.0)
            return QuadFloor(
                m=float(rest.pop("m")),
                c0=float(rest.pop("c0")),
                theta=np.asarray(theta, dtype=float),
            )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from None
    raise ConfigError(f"{where}.kind must be 'norm' or 'quad_floor', got {kind!r}")


def build_costs(raw: dict) -> CostSpec:
    costs_raw = _need(raw, "costs", "scenario")
    return CostSpec(
        cx=_build_cost(_need(costs_raw, "cx", "costs"), "costs.cx"),
        cf=_build_cost(_need(costs_raw, "cf", "costs"), "costs.cf"),
        cs=_build_cost(_need(costs_raw, "cs", "costs"), "costs.cs"),
    )


def _build_model(raw, cls, where):
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError(f"{where} must be a mapping with a 'kind'")
    params = {k: v for k, v in raw.items() if k != "kind"}
    try:
        return cls(kind=raw["kind"], params=params)
    except ValueError as e:
        raise ConfigError(f"{where}: {e}") from None


def validate_controllers(raw: dict, costs: CostSpec) -> list[dict]:
    entries = _need(raw, "controllers", "scenario")
    if not isinstance(entries, list) or not entries:
        raise ConfigError("controllers must be a non-empty list")
    out = []
    for i, entry in enumerate(entries):
        where = f"controllers[{i}]"
        if not isinstance(entry, dict) or "type" not in entry:
            raise ConfigError(f"{where} must be a mapping with a 'type'")
        ctype = entry["type"]
        if ctype not in _CONTROLLER_TYPES:
            raise ConfigError(f"{where}.type must be one of {_CONTROLLER_TYPES}, got {ctype!r}")
        if ctype in ("mrpc", "zero_slow") and not costs.all_norms():
            raise ConfigError(
                f"{where}: {ctype} requires norm stage costs on all channels"
            )
        if ctype in ("afhc", "fhc"):
            if not isinstance(costs.cf, NormCost):
                raise ConfigError(f"{where}: {ctype} requires a norm fast-action cost")
            look = entry.get("lookahead")
            if not isinstance(look, int) or look < 0:
                raise ConfigError(f"{where}.lookahead must be a nonnegative integer")
            if ctype == "fhc":
                phase = entry.get("phase", 1)
                if not isinstance(phase, int) or not 1 <= phase <= look + 1:
                    raise ConfigError(f"{where}.phase must be in 1..lookahead+1")
            if entry.get("bound_report"):
                if not (isinstance(costs.cx, QuadFloor) and costs.cx.c0 > 0):
                    raise ConfigError(
                        f"{where}: the horizon-averaging bound report requires a "
                        "strongly convex state cost with a positive floor "
                        "(quad_floor with c0 > 0)"
                    )
        out.append(dict(entry))
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    raw: dict
    seeds: list[int]
    sweep: dict[str, list] = field(default_factory=dict)

    def point(self, overrides: dict | None = None) -> dict:
        """Raw scenario mapping with dotted-path overrides applied."""
        merged = copy.deepcopy(self.raw)
        for path, value in (overrides or {}).items():
            node = merged
            parts = path.split(".")
            for part in parts[:-1]:
                if not isinstance(node, dict) or part not in node:
                    raise ConfigError(f"sweep path {path!r} does not exist in the scenario")
                node = node[part]
            if not isinstance(node, dict) or parts[-1] not in node:
                raise ConfigError(f"sweep path {path!r} does not exist in the scenario")
            node[parts[-1]] = value
        return merged


def validate_point(merged: dict):
    """Full cross-validation of one (possibly overridden) scenario mapping.

    Returns (spec, costs, noise_model, prediction_model, controllers).
    """
    spec = build_system(merged)
    costs = build_costs(merged)
    noise = _build_model(_need(merged, "noise", "scenario"), NoiseModel, "noise")
    pred = _build_model(_need(merged, "predictions", "scenario"), PredictionModel, "predictions")
    controllers = validate_controllers(merged, costs)
    if isinstance(costs.cx, QuadFloor) and costs.cx.theta.ndim == 2:
        if costs.cx.theta.shape != (spec.T, spec.n):
            raise ConfigError(
                f"costs.cx.theta per-step array must have shape {(spec.T, spec.n)}"
            )
    return spec, costs, noise, pred, controllers


def load_scenario(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigError("scenario file must contain a mapping")
    return parse_scenario(raw)


def parse_scenario(raw: dict) -> ScenarioConfig:
    name = raw.get("scenario", "scenario")
    if not isinstance(name, str) or not name:
        raise ConfigError("scenario name must be a non-empty string")
    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds must be a non-empty list of integers")
    sweep = raw.get("sweep", {}) or {}
    if not isinstance(sweep, dict):
        raise ConfigError("sweep must be a mapping of dotted paths to value lists")
    for path, values in sweep.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{path} must be a non-empty list of values")
    body = {k: v for k, v in raw.items() if k not in ("scenario", "seeds", "sweep")}
    cfg = ScenarioConfig(name=name, raw=body, seeds=list(seeds), sweep=dict(sweep))
    validate_point(cfg.point())  # the base point must be valid
    for path, values in sweep.items():
        for value in values:
            validate_point(cfg.point({path: value}))
    return cfg


def expand_sweep(cfg: ScenarioConfig) -> list[tuple[str, dict]]:
    """All sweep points as (label, overrides), base point first when no sweep.

    The grid is the cartesian product over sorted paths, so ordering is
    reproducible no matter how the YAML was written.
    """
    if not cfg.sweep:
        return [(cfg.name, {})]
    paths = sorted(cfg.sweep)
    points = []
    for combo in itertools.product(*(cfg.sweep[p] for p in paths)):
        overrides = dict(zip(paths, combo))
        label = cfg.name + "".join(f"|{p}={v}" for p, v in overrides.items())
        points.append((label, overrides))
    return points
