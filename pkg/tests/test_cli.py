"""End-to-end checks of the console entry point and its exit codes."""

import csv
import json
from importlib import resources

import pytest

from rescue_spatap.cli import main

MIDTOWN = str(resources.files("rescue_spatap").joinpath("maps/midtown.json"))


def test_generate_then_run_with_trace(tmp_path, capsys):
    scen = tmp_path / "scen.json"
    rc = main(["generate", "--map", MIDTOWN, "--buildings", "6",
               "--ignitions", "2", "--agents", "2", "--seed", "5",
               "--out", str(scen)])
    assert rc == 0
    out = capsys.readouterr().out
    assert f"wrote {scen}:" in out
    assert "6 buildings" in out
    assert scen.exists()

    trace = tmp_path / "trace.csv"
    rc = main(["run", "--scenario", str(scen), "--planner", "spatap_ext",
               "--horizon", "6", "--seed", "3", "--trace", str(trace)])
    assert rc == 0
    out = capsys.readouterr().out
    assert f"wrote {trace}" in out
    assert "planner=spatap_ext horizon=6 avg_reward=0." in out

    with open(trace, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "reward", "burning_count", "agent_positions"]
    assert len(rows) == 1 + 6 + 1  # header + one row per visited state


def test_run_is_deterministic_at_cli_level(tmp_path, capsys):
    scen = tmp_path / "scen.json"
    main(["generate", "--map", MIDTOWN, "--buildings", "5",
          "--ignitions", "1", "--agents", "1", "--seed", "11",
          "--out", str(scen)])
    capsys.readouterr()
    args = ["run", "--scenario", str(scen), "--planner", "greedy",
            "--horizon", "5", "--seed", "8"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first


def test_missing_scenario_file_exits_2(tmp_path, capsys):
    rc = main(["run", "--scenario", str(tmp_path / "nope.json"),
               "--planner", "greedy", "--horizon", "3", "--seed", "1"])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")


def test_malformed_scenario_file_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{]")
    rc = main(["run", "--scenario", str(bad), "--planner", "greedy",
               "--horizon", "3", "--seed", "1"])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_scenario_with_unknown_field_exits_2(tmp_path, capsys):
    doc = json.loads((resources.files("rescue_spatap")
                      / "maps/midtown.json").read_text())
    doc["mystery"] = 1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    rc = main(["run", "--scenario", str(bad), "--planner", "greedy",
               "--horizon", "3", "--seed", "1"])
    assert rc == 2


def test_bench_statespace_emits_step_csv(tmp_path, capsys):
    rc = main(["bench", "--preset", "statespace", "--seed", "9",
               "--overrides",
               "scenarios=1,samples_per_scenario=2,buildings=6,horizon=8",
               "--out", str(tmp_path)])
    assert rc == 0
    for name in ("summary.csv", "runs.csv", "states_by_step.csv"):
        assert (tmp_path / name).exists()
    out = capsys.readouterr().out
    assert "spatap_ext" in out
    # no optimal planner in this preset, so no percentage column
    assert "pct_of_optimal" not in out


def test_bench_table1_prints_percentages(tmp_path, capsys):
    rc = main(["bench", "--preset", "table1", "--seed", "13",
               "--overrides", ("scenarios=1,samples_per_scenario=1,"
                               "buildings=5,ignitions=2,horizon=4"),
               "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "pct_of_optimal=100.000" in out
    assert (tmp_path / "summary.csv").exists()
    assert (tmp_path / "runs.csv").exists()
    assert not (tmp_path / "states_by_step.csv").exists()


def test_bench_scalability_writes_scaling_csv(tmp_path, capsys):
    rc = main(["bench", "--preset", "scalability", "--seed", "21",
               "--overrides",
               "scenarios=1,samples_per_scenario=1,horizon=5",
               "--out", str(tmp_path)])
    assert rc == 0
    assert "wrote" in capsys.readouterr().out
    with open(tmp_path / "scaling.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["dimension"] for r in rows} == {"buildings", "agents"}
    assert all(float(r["mean_plan_millis"]) > 0.0 for r in rows)


def test_bench_state_cap_exits_3(tmp_path, capsys):
    rc = main(["bench", "--preset", "table1", "--seed", "2",
               "--overrides", ("scenarios=1,samples_per_scenario=1,"
                               "buildings=24,planners=optimal,horizon=2"),
               "--out", str(tmp_path)])
    assert rc == 3
    assert "scenario 0" in capsys.readouterr().err


@pytest.mark.parametrize("text", ["nonsense=5", "scenarios"])
def test_bad_override_exits_2(tmp_path, capsys, text):
    rc = main(["bench", "--preset", "table1", "--overrides", text,
               "--out", str(tmp_path)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_is_an_argparse_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
