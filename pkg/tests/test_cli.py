import textwrap

import numpy as np
import pytest
from click.testing import CliRunner

from tscontrol.cli import main
from tscontrol.harness import read_csv
from tscontrol.validate import CheckResult, format_results, run_validation


SCENARIO = textwrap.dedent(
    """
    scenario: clitest
    seeds: [0]
    system: {A: 0.5, Bf: 1.0, Bs: 1.0, T: 6, k: 2}
    costs:
      cx: {kind: norm, p: 1, weight: 0.8}
      cf: {kind: norm, p: 1}
      cs: {kind: norm, p: 1, weight: 0.4}
    noise: {kind: uniform_iid, radius: 1.0}
    predictions: {kind: additive_bounded, eps: 0.1}
    controllers:
      - {type: offline_opt}
      - {type: mrpc}
    sweep:
      system.k: [2, 3]
    """
)


@pytest.fixture()
def scenario_file(tmp_path):
    path = tmp_path / "scen.yaml"
    path.write_text(SCENARIO)
    return path


def test_run_writes_base_point_only(scenario_file, tmp_path):
    out = tmp_path / "runs.csv"
    result = CliRunner().invoke(main, ["run", str(scenario_file), "--out", str(out)])
    assert result.exit_code == 0, result.output
    rows = read_csv(str(out))
    assert len(rows) == 2  # 1 seed x 2 controllers, sweep ignored
    assert {r["scenario"] for r in rows} == {"clitest"}
    assert (tmp_path / "runs.csv.meta.json").exists()


def test_sweep_expands_grid(scenario_file, tmp_path):
    out = tmp_path / "grid.csv"
    result = CliRunner().invoke(
        main, ["sweep", str(scenario_file), "--out", str(out), "--jobs", "2"]
    )
    assert result.exit_code == 0, result.output
    rows = read_csv(str(out))
    assert len(rows) == 4  # 2 sweep points x 1 seed x 2 controllers
    assert {r["scenario"] for r in rows} == {
        "clitest|system.k=2",
        "clitest|system.k=3",
    }


def test_sweep_without_grid_exits_2(tmp_path):
    path = tmp_path / "nosweep.yaml"
    path.write_text(SCENARIO.replace("sweep:\n  system.k: [2, 3]\n", ""))
    result = CliRunner().invoke(main, ["sweep", str(path), "--out", str(tmp_path / "o.csv")])
    assert result.exit_code == 2
    assert "no sweep section" in result.output


def test_bad_config_exits_2_and_names_field(scenario_file, tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text(SCENARIO.replace("k: 2}", "k: 40}"))
    result = CliRunner().invoke(main, ["run", str(bad), "--out", str(tmp_path / "o.csv")])
    assert result.exit_code == 2
    assert "system.k" in result.output


def test_run_rerun_byte_identical(scenario_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    r1 = CliRunner().invoke(main, ["run", str(scenario_file), "--out", str(a)])
    r2 = CliRunner().invoke(main, ["run", str(scenario_file), "--out", str(b)])
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert a.read_bytes() == b.read_bytes()


def test_show_reports_and_audits(scenario_file, tmp_path):
    out = tmp_path / "runs.csv"
    CliRunner().invoke(main, ["run", str(scenario_file), "--out", str(out)])
    result = CliRunner().invoke(main, ["show", str(out)])
    assert result.exit_code == 0, result.output
    assert "no bound violations" in result.output
    assert "offline_opt" in result.output and "mrpc" in result.output


def test_show_flags_violations(scenario_file, tmp_path):
    out = tmp_path / "runs.csv"
    CliRunner().invoke(main, ["run", str(scenario_file), "--out", str(out)])
    # forge a record that breaks its own bound columns
    lines = out.read_text().splitlines()
    header = lines[0].split(",")
    row = lines[1].split(",")
    row[header.index("total_cost")] = "1e9"
    row[header.index("thm2_factor")] = "1.0"
    row[header.index("thm2_additive")] = "0.0"
    row[header.index("opt_cost")] = "1.0"
    out.write_text("\n".join([lines[0], ",".join(row)] + lines[2:]) + "\n")
    result = CliRunner().invoke(main, ["show", str(out)])
    assert result.exit_code == 1
    assert "violation" in result.output


def test_show_rejects_foreign_csv(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n")
    result = CliRunner().invoke(main, ["show", str(path)])
    assert result.exit_code == 2


def test_validate_quick_passes():
    result = CliRunner().invoke(main, ["validate", "--quick"])
    assert result.exit_code == 0, result.output
    assert "all checks passed" in result.output


def test_validate_catches_broken_controller(monkeypatch):
    monkeypatch.setenv("TSCONTROL_BREAK_MRPC", "1")
    result = CliRunner().invoke(main, ["validate", "--quick"])
    assert result.exit_code == 1
    assert "FAIL" in result.output


def test_validation_results_structure():
    results = run_validation(quick=True)
    names = [r.name for r in results]
    assert len(names) == len(set(names))
    assert all(isinstance(r, CheckResult) for r in results)
    assert all(r.cases > 0 for r in results)
    assert all(r.ok for r in results)
    table = format_results(results)
    assert "all checks passed" in table


def test_check_result_accumulates():
    res = CheckResult("demo")
    res.case(True, "fine")
    res.case(False, "broken thing")
    assert res.cases == 2
    assert not res.ok
    assert res.failures == ["broken thing"]
    assert np.isfinite(res.cases)
