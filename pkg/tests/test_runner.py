"""End-to-end scenario runs: determinism, per-scenario checks, move-record
semantics, and parameter sweeps."""

import json

import pytest

from proxysim.metrics import MOVE_CSV_COLUMNS
from proxysim.runner import SWEEP_PARAMETERS, run_scenario, sweep
from proxysim.scripts import builtin_script


def _run(name, **kwargs):
    return run_scenario(builtin_script(name), **kwargs)


# -- scenario outcomes -----------------------------------------------------------


def test_tictactoe_nine_moves_no_breaks():
    m = _run("tictactoe").metrics
    assert len(m.moves) == 9
    assert m.illusion_breaks == 0
    assert m.min_slack_ms is not None and m.min_slack_ms > 0
    assert m.max_speed_ratio <= 1.0 + 1e-9
    assert m.max_turn_ratio <= 1.0 + 1e-9
    assert m.duration_ms > 0
    assert len(m.digest) == 64


def test_move_records_carry_display_semantics():
    m = _run("tictactoe").metrics
    for move in m.moves:
        assert move.kind == "carry"
        assert move.release_ms is not None and move.arrival_ms is not None
        # the remote set-down is displayed exactly one latency after release
        assert move.display_ms == pytest.approx(move.release_ms + 1500, abs=1e-9)
        assert move.slack_ms == pytest.approx(
            move.display_ms - move.arrival_ms, abs=1e-9
        )
        assert move.illusion_break == (move.slack_ms < 0)
        assert not move.best_effort
        assert move.distance_m > 0
        assert move.waypoints >= 1


def test_telekinesis_classifies_all_trials():
    m = _run("telekinesis").metrics
    assert m.gesture_total == 9
    assert m.gesture_correct == 9
    assert m.gesture_accuracy == 1.0
    assert m.illusion_breaks == 0


def test_city_builder_checks_and_reassignments():
    m = _run("city-builder").metrics
    assert m.checks and all(m.checks.values())
    assert m.reassignments == 3
    assert m.illusion_breaks == 0


def test_clink_mugs_checks_all_pass():
    m = _run("clink-mugs").metrics
    expected = {
        "strike-gap",
        "mirror-a",
        "mirror-b",
        "mirrors-engaged",
        "quiescent-a",
        "quiescent-b",
        "race-winner",
    }
    assert expected <= set(m.checks)
    assert all(m.checks.values())


def test_wall_push_pursuit_tracks():
    m = _run("wall-push").metrics
    assert m.checks.get("pursuit-0-tracking") is True


# -- determinism -------------------------------------------------------------------


def test_repeat_runs_are_bit_identical():
    a = _run("tictactoe").metrics
    b = _run("tictactoe").metrics
    assert a.digest == b.digest
    assert a.to_json() == b.to_json()


def test_observation_does_not_perturb_the_run():
    plain = _run("tictactoe").metrics.digest
    observed = _run("tictactoe", collect_states=True, state_stride=7).metrics.digest
    assert observed == plain


def test_collected_states_respect_stride():
    result = _run("tictactoe", collect_states=True, state_stride=5)
    assert result.states
    times = [s["time_ms"] for s in result.states]
    deltas = {b - a for a, b in zip(times, times[1:])}
    assert deltas == {50}
    assert result.final_state["time_ms"] == result.metrics.duration_ms


# -- metrics serialization -----------------------------------------------------------


def test_metrics_json_and_csv_round_trip():
    m = _run("tictactoe").metrics
    doc = json.loads(m.to_json())
    assert doc["scenario"] == "tictactoe"
    assert len(doc["moves"]) == 9
    assert doc["min_slack_ms"] == pytest.approx(m.min_slack_ms, abs=1e-6)
    header = m.moves_to_csv().splitlines()[0]
    assert header.split(",") == MOVE_CSV_COLUMNS
    assert len(m.moves_to_csv().splitlines()) == 10


# -- sweeps ----------------------------------------------------------------------


def test_latency_sweep_slack_is_linear_and_breaks_fall():
    rows = sweep("artificial_latency", [0, 1500], builtin_script("tictactoe"))
    by_value = {r["value"]: r for r in rows}
    assert by_value[0]["illusion_breaks"] == 9  # every move breaks with no buffer
    assert by_value[1500]["illusion_breaks"] == 0
    # trajectories are identical; slack shifts by exactly the added latency
    assert by_value[1500]["min_slack_ms"] - by_value[0]["min_slack_ms"] == pytest.approx(
        1500, abs=1e-6
    )


def test_robot_speed_sweep_monotone():
    rows = sweep("robot_speed", [0.25, 0.5], builtin_script("tictactoe"))
    slow, fast = rows[0], rows[1]
    assert fast["min_slack_ms"] > slow["min_slack_ms"]
    assert fast["illusion_breaks"] <= slow["illusion_breaks"]


def test_table_size_sweep_scales_geometry():
    base = _run("tictactoe").metrics
    (small,) = sweep("table_size", [0.6], builtin_script("tictactoe"))
    assert small["moves"] == 9
    assert small["illusion_breaks"] == 0
    # shorter hops leave more slack than the 0.9 m table
    assert small["min_slack_ms"] > base.min_slack_ms


def test_sweep_rejects_unknown_parameter():
    with pytest.raises(ValueError):
        sweep("gravity", [9.8], builtin_script("tictactoe"))
    assert "artificial_latency" in SWEEP_PARAMETERS
