import math
import textwrap

import numpy as np
import pytest

from tscontrol.config import (
    ConfigError,
    ScenarioConfig,
    build_costs,
    build_system,
    expand_sweep,
    load_scenario,
    parse_scenario,
    validate_controllers,
    validate_point,
)
from tscontrol.system import NormCost, QuadFloor


def _base_raw(**over):
    raw = {
        "system": {"A": 0.5, "Bf": 1.0, "Bs": 1.0, "T": 6, "k": 2},
        "costs": {
            "cx": {"kind": "norm", "p": 1},
            "cf": {"kind": "norm", "p": 1},
            "cs": {"kind": "norm", "p": 1, "weight": 0.5},
        },
        "noise": {"kind": "gaussian_iid", "sigma": 1.0},
        "predictions": {"kind": "perfect"},
        "controllers": [{"type": "mrpc"}, {"type": "offline_opt"}],
    }
    raw.update(over)
    return raw


def test_scalar_shorthand_builds_1x1_system():
    spec = build_system(_base_raw())
    assert spec.n == 1
    assert spec.A[0, 0] == 0.5
    assert spec.T == 6 and spec.k == 2


def test_system_field_errors_name_the_field():
    with pytest.raises(ConfigError, match="system.A"):
        build_system({"system": {"Bf": 1.0, "Bs": 1.0, "T": 4, "k": 2}})
    with pytest.raises(ConfigError, match="system.Bf must be 2x2"):
        build_system({"system": {"A": [[1, 0], [0, 1]], "Bf": 1.0, "Bs": 1.0, "T": 4, "k": 2}})
    with pytest.raises(ConfigError, match="system.k"):
        build_system({"system": {"A": 0.5, "Bf": 1.0, "Bs": 1.0, "T": 4, "k": 9}})
    with pytest.raises(ConfigError, match="system.T"):
        build_system({"system": {"A": 0.5, "Bf": 1.0, "Bs": 1.0, "T": -1, "k": 1}})
    with pytest.raises(ConfigError, match="contradicts"):
        build_system({"system": {"n": 2, "A": 0.5, "Bf": 1.0, "Bs": 1.0, "T": 4, "k": 2}})
    with pytest.raises(ConfigError, match="system"):
        build_system({"system": {"A": 0.5, "Bf": 0.0, "Bs": 1.0, "T": 4, "k": 2}})


def test_cost_parsing():
    costs = build_costs(
        {
            "costs": {
                "cx": {"kind": "quad_floor", "m": 2.0, "c0": 0.3, "theta": 0.1},
                "cf": {"kind": "norm", "p": "inf", "weight": 2.0},
                "cs": {"kind": "norm", "p": 2},
            }
        }
    )
    assert isinstance(costs.cx, QuadFloor) and costs.cx.m == 2.0
    assert isinstance(costs.cf, NormCost) and costs.cf.p == math.inf
    assert costs.cs.weight == 1.0
    with pytest.raises(ConfigError, match="costs.cx"):
        build_costs({"costs": {"cx": {"kind": "soft"}, "cf": {}, "cs": {}}})
    with pytest.raises(ConfigError, match="costs.cf"):
        build_costs(
            {
                "costs": {
                    "cx": {"kind": "norm", "p": 1},
                    "cf": {"kind": "norm"},
                    "cs": {"kind": "norm", "p": 1},
                }
            }
        )


def test_controller_validation():
    raw = _base_raw()
    costs = build_costs(raw)
    ctrls = validate_controllers(raw, costs)
    assert [c["type"] for c in ctrls] == ["mrpc", "offline_opt"]
    with pytest.raises(ConfigError, match="type"):
        validate_controllers({"controllers": [{"type": "pid"}]}, costs)
    with pytest.raises(ConfigError, match="lookahead"):
        validate_controllers({"controllers": [{"type": "afhc"}]}, costs)
    with pytest.raises(ConfigError, match="phase"):
        validate_controllers(
            {"controllers": [{"type": "fhc", "lookahead": 2, "phase": 4}]}, costs
        )
    quad_raw = _base_raw()
    quad_raw["costs"]["cx"] = {"kind": "quad_floor", "m": 1.0, "c0": 0.0}
    quad_costs = build_costs(quad_raw)
    with pytest.raises(ConfigError, match="mrpc requires norm"):
        validate_controllers({"controllers": [{"type": "mrpc"}]}, quad_costs)
    # bound report needs the floor to be strictly positive
    with pytest.raises(ConfigError, match="c0 > 0"):
        validate_controllers(
            {"controllers": [{"type": "afhc", "lookahead": 1, "bound_report": True}]},
            quad_costs,
        )


def test_validate_point_checks_theta_shape():
    raw = _base_raw()
    raw["costs"]["cx"] = {
        "kind": "quad_floor", "m": 1.0, "c0": 0.1,
        "theta": [[0.0], [0.0]],  # 2 steps for a 6-step horizon
    }
    raw["controllers"] = [{"type": "offline_opt"}]
    with pytest.raises(ConfigError, match="theta"):
        validate_point(raw)


def test_parse_scenario_roundtrip():
    raw = _base_raw()
    raw["scenario"] = "demo"
    raw["seeds"] = [3, 4]
    cfg = parse_scenario(raw)
    assert cfg.name == "demo"
    assert cfg.seeds == [3, 4]
    spec, costs, noise, pred, ctrls = validate_point(cfg.point())
    assert spec.T == 6
    assert noise.kind == "gaussian_iid"
    assert pred.kind == "perfect"


def test_parse_scenario_rejects_bad_seeds_and_sweep():
    raw = _base_raw()
    raw["seeds"] = "nope"
    with pytest.raises(ConfigError, match="seeds"):
        parse_scenario(raw)
    raw = _base_raw()
    raw["sweep"] = {"system.k": []}
    with pytest.raises(ConfigError, match="sweep.system.k"):
        parse_scenario(raw)


def test_sweep_values_validated_up_front():
    raw = _base_raw()
    raw["sweep"] = {"system.k": [2, 40]}  # 40 > T: must fail at parse time
    with pytest.raises(ConfigError, match="system.k"):
        parse_scenario(raw)


def test_point_overrides_dotted_paths():
    cfg = parse_scenario(_base_raw())
    merged = cfg.point({"system.k": 3, "noise.sigma": 0.1})
    assert merged["system"]["k"] == 3
    assert merged["noise"]["sigma"] == 0.1
    # the base mapping is untouched
    assert cfg.raw["system"]["k"] == 2
    with pytest.raises(ConfigError, match="does not exist"):
        cfg.point({"system.z": 1})
    with pytest.raises(ConfigError, match="does not exist"):
        cfg.point({"nosuch.k": 1})


def test_expand_sweep_ordering_and_labels():
    raw = _base_raw()
    raw["scenario"] = "s"
    raw["sweep"] = {"system.k": [2, 3], "noise.sigma": [0.5, 1.0]}
    cfg = parse_scenario(raw)
    pts = expand_sweep(cfg)
    labels = [l for l, _ in pts]
    # cartesian product over sorted paths: noise.sigma varies slowest
    assert labels == [
        "s|noise.sigma=0.5|system.k=2",
        "s|noise.sigma=0.5|system.k=3",
        "s|noise.sigma=1.0|system.k=2",
        "s|noise.sigma=1.0|system.k=3",
    ]
    assert pts[0][1] == {"noise.sigma": 0.5, "system.k": 2}
    # no sweep: single base point
    assert expand_sweep(parse_scenario(_base_raw())) == [("scenario", {})]


def test_load_scenario_from_file(tmp_path):
    text = textwrap.dedent(
        """
        scenario: filetest
        seeds: [1]
        system: {A: 0.5, Bf: 1.0, Bs: 1.0, T: 4, k: 2}
        costs:
          cx: {kind: norm, p: 1}
          cf: {kind: norm, p: 2}
          cs: {kind: norm, p: inf, weight: 0.3}
        noise: {kind: uniform_iid, radius: 1.0}
        predictions: {kind: additive_bounded, eps: 0.25}
        controllers:
          - {type: mrpc}
          - {type: zero_slow}
        """
    )
    path = tmp_path / "scen.yaml"
    path.write_text(text)
    cfg = load_scenario(str(path))
    assert cfg.name == "filetest"
    spec, costs, noise, pred, ctrls = validate_point(cfg.point())
    assert costs.cs.p == math.inf
    assert pred.params["eps"] == 0.25
    bad = tmp_path / "bad.yaml"
    bad.write_text("scenario: [unclosed")
    with pytest.raises(ConfigError):
        load_scenario(str(bad))
    nonmap = tmp_path / "nonmap.yaml"
    nonmap.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_scenario(str(nonmap))


def test_scenario_config_is_reusable():
    cfg = ScenarioConfig(name="x", raw=_base_raw(), seeds=[0])
    a = cfg.point()
    a["system"]["T"] = 99
    assert cfg.point()["system"]["T"] == 6  # deep copies every time
    assert isinstance(np.asarray(a["system"]["A"]), np.ndarray)
