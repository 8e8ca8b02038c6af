"""
Tests for the command-line interface.
"""

import csv
import json

import pytest
from click.testing import CliRunner

from cli import cli
from results import TOOL_VERSION, ResultRecord


@pytest.fixture
def runner():
    return CliRunner()


def record_of(result):
    """The JSON record printed on stdout (warnings may precede it)."""
    text = result.stdout
    return json.loads(text[text.index("{"):])


def test_info_tight(runner):
    result = runner.invoke(cli, ["info", "(2x2,1)^3"])
    assert result.exit_code == 0
    rec = record_of(result)
    assert rec["s"] == 0
    assert (rec["psi_rows"], rec["psi_cols"]) == (6, 6)
    assert rec["classification"] == "tight"
    assert rec["bezout_bound"] == 64
    assert rec["tool_version"] == TOOL_VERSION


def test_info_improper(runner):
    rec = record_of(runner.invoke(cli, ["info", "(2x2,1)^4"]))
    assert rec["s"] == -4
    assert rec["classification"] == "improper"


def test_parse_error_exits_2(runner):
    result = runner.invoke(cli, ["info", "(3x3"])
    assert result.exit_code == 2
    assert "Error" in result.output


def test_invalid_scenario_exits_2(runner):
    assert runner.invoke(cli, ["info", "(2x2,3)^3"]).exit_code == 2


def test_feasibility(runner):
    assert record_of(runner.invoke(cli, ["feasibility", "(2x2,1)^3"]))["verdict"] == "feasible"
    assert record_of(runner.invoke(cli, ["feasibility", "(3x3,2)^2"]))["verdict"] == "infeasible"
    assert record_of(runner.invoke(cli, ["feasibility", "(5x5,2)^4", "--draws", "3"]))["verdict"] == "feasible"
    assert record_of(runner.invoke(cli, ["feasibility", "(2x2,1)^4"]))["verdict"] == "improper"


def test_count_exact(runner):
    result = runner.invoke(cli, ["count", "(2x4,1)^5", "--method", "exact"])
    assert result.exit_code == 0
    rec = record_of(result)
    assert rec["count"] == 44
    assert rec["method"] == "backtracking"
    assert rec["closed_form"] == 44


def test_count_exact_dp_strategy(runner):
    rec = record_of(runner.invoke(cli, ["count", "(4x3,1)^6", "-m", "exact", "--strategy", "dp"]))
    assert rec["count"] == 7570
    assert rec["method"] == "dynamic_programming"


def test_count_auto_picks_exact_for_single_beam(runner):
    rec = record_of(runner.invoke(cli, ["count", "(2x2,1)^3"]))
    assert rec["count"] == 2


def test_count_mc_square(runner):
    result = runner.invoke(cli, ["count", "(4x4,2)^3", "--method", "mc-square",
                                 "--epsilon", "0.02", "--seed", "7"])
    assert result.exit_code == 0
    rec = record_of(result)
    assert rec["method"] == "mc-square"
    assert rec["converged"] is True
    assert abs(rec["mean"] - 6) <= 0.6
    assert rec["seed"] == 7


def test_count_mc_general_flags_infeasible(runner):
    result = runner.invoke(cli, ["count", "(3x3,2)^2", "--method", "mc-general"])
    assert result.exit_code == 0
    rec = record_of(result)
    assert rec["mean"] == 0.0
    assert rec["all_zero"] is True
    assert rec["verdict"] == "infeasible"


def test_hypothesis_violations_exit_3(runner):
    assert runner.invoke(cli, ["count", "(4x4,2)^3", "--method", "exact"]).exit_code == 3
    assert runner.invoke(cli, ["count", "(3x5,2)^3", "--method", "mc-square"]).exit_code == 3
    assert runner.invoke(cli, ["count", "(2x2,1)^4"]).exit_code == 3


def test_records_are_deterministic(runner):
    args = ["count", "(2x2,1)^3", "-m", "mc-general", "--seed", "3", "--max-samples", "2000"]
    first = record_of(runner.invoke(cli, args))
    second = record_of(runner.invoke(cli, args))
    first.pop("wall_time_seconds")
    second.pop("wall_time_seconds")
    assert first == second
    assert list(first) == [f for f in ResultRecord.model_fields if f != "wall_time_seconds"]


def test_json_record_parses_back(runner):
    result = runner.invoke(cli, ["count", "(4x4,2)^3", "-m", "mc-square", "--max-samples", "500"])
    text = result.stdout[result.stdout.index("{"):].strip()
    assert ResultRecord.model_validate_json(text).to_json() == text


def test_csv_format(runner):
    result = runner.invoke(cli, ["info", "(4x4,2)^3", "--format", "csv"])
    rows = list(csv.DictReader(result.stdout.splitlines()))
    assert len(rows) == 1
    assert rows[0]["scenario"] == "(4x4,2)^3"
    assert rows[0]["s"] == "0"
    assert rows[0]["count"] == ""


def test_text_format(runner):
    result = runner.invoke(cli, ["count", "(2x4,1)^5", "-m", "exact", "--format", "text"])
    assert "44 solutions" in result.stdout


def test_trace_file(runner, tmp_path):
    trace = tmp_path / "trace.csv"
    result = runner.invoke(
        cli,
        ["count", "(2x2,1)^3", "-m", "mc-square", "--max-samples", "300",
         "--epsilon", "1e-9", "--trace", str(trace)],
        env={"IACOUNT_CHECKPOINT_EVERY": "100"},
    )
    assert result.exit_code == 0
    rows = list(csv.DictReader(trace.read_text().splitlines()))
    assert [int(r["n"]) for r in rows] == [100, 200, 300]
    assert set(rows[0]) == {"n", "mean", "std_error_rel"}


def test_seed_from_environment(runner):
    result = runner.invoke(cli, ["feasibility", "(2x2,1)^3"], env={"IACOUNT_SEED": "21"})
    assert record_of(result)["seed"] == 21


def test_bad_setting_exits_2(runner):
    result = runner.invoke(cli, ["info", "(2x2,1)^3"], env={"IACOUNT_EPSILON": "-1"})
    assert result.exit_code == 2
