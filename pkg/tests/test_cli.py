"""CLI verbs: artifacts, exit codes, and argument validation."""

import csv
import json

import pytest

from proxysim.cli import main
from proxysim.metrics import MOVE_CSV_COLUMNS, SUMMARY_CSV_COLUMNS
from proxysim.scripts import builtin_script, save_script


def test_run_writes_artifacts_and_exits_zero(tmp_path, capsys):
    out = tmp_path / "artifacts"
    code = main(["run", "tictactoe", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "scenario      tictactoe" in printed
    assert "moves         9" in printed
    assert "illusion breaks 0" in printed

    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["scenario"] == "tictactoe"
    assert len(metrics["moves"]) == 9
    assert (out / "digest.txt").read_text().strip() == metrics["digest"]
    final = json.loads((out / "final_state.json").read_text())
    assert final["time_ms"] == metrics["duration_ms"]
    with open(out / "moves.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 9
    assert list(rows[0]) == MOVE_CSV_COLUMNS


def test_run_check_lines_and_script_path(tmp_path, capsys):
    path = tmp_path / "clink.json"
    save_script(builtin_script("clink-mugs"), str(path))
    code = main(["run", str(path)])
    assert code == 0
    printed = capsys.readouterr().out
    check_lines = [l for l in printed.splitlines() if l.startswith("check ")]
    assert len(check_lines) == 7
    assert all(l.endswith(": pass") for l in check_lines)


def test_run_latency_override_fails_loudly(capsys):
    # with no display buffer every move breaks the illusion -> exit 1
    code = main(["run", "tictactoe", "--latency-ms", "0"])
    assert code == 1
    assert "illusion breaks 9" in capsys.readouterr().out


def test_run_unknown_script_exits_with_hint(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "checkers"])
    assert "builtins:" in str(exc.value)


def test_sweep_writes_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main([
        "sweep", "tictactoe",
        "--parameter", "artificial_latency",
        "--values", "0,1500",
        "--out", str(out),
    ])
    assert code == 0
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["value"] for r in rows] == ["0", "1500"]
    assert list(rows[0]) == SUMMARY_CSV_COLUMNS
    assert int(rows[0]["illusion_breaks"]) > int(rows[1]["illusion_breaks"])


def test_sweep_stdout_and_bad_values(tmp_path, capsys):
    code = main([
        "sweep", "tictactoe",
        "--parameter", "artificial_latency",
        "--values", "1500",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith(",".join(SUMMARY_CSV_COLUMNS[:3]))
    with pytest.raises(SystemExit):
        main(["sweep", "tictactoe", "--parameter", "artificial_latency",
              "--values", "abc"])
    with pytest.raises(SystemExit):
        main(["sweep", "tictactoe", "--parameter", "artificial_latency",
              "--values", ""])
    with pytest.raises(SystemExit):  # argparse rejects unknown parameters
        main(["sweep", "tictactoe", "--parameter", "gravity", "--values", "1"])


def test_export_round_trip(tmp_path, capsys):
    out = tmp_path / "run"
    main(["run", "tictactoe", "--out", str(out)])
    capsys.readouterr()

    moves_csv = tmp_path / "moves.csv"
    summary_csv = tmp_path / "summary.csv"
    code = main([
        "export", str(out / "metrics.json"),
        "--moves-csv", str(moves_csv),
        "--summary-csv", str(summary_csv),
    ])
    assert code == 0
    with open(moves_csv, newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 9
    with open(summary_csv, newline="") as fh:
        (row,) = list(csv.DictReader(fh))
    assert row["scenario"] == "tictactoe"
    assert row["moves"] == "9"
    assert row["checks_pass"] == "1"
    # exported summary matches what the run itself would report
    metrics = json.loads((out / "metrics.json").read_text())
    assert float(row["min_slack_ms"]) == pytest.approx(metrics["min_slack_ms"])

    capsys.readouterr()
    code = main(["export", str(out / "metrics.json")])  # stdout default
    assert code == 0
    assert capsys.readouterr().out.count("\n") == 2  # header + one row


def test_bad_latency_spec_rejected():
    with pytest.raises(SystemExit):
        main(["serve-relay", "--latency", "hands1500"])
    with pytest.raises(SystemExit):
        main(["serve-relay", "--latency", "hands=fast"])


def test_verb_required():
    with pytest.raises(SystemExit):
        main([])
