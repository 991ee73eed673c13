"""Golden outcomes for the exported scenario files.

Each scenarios/<name>.json was produced by tools/export_scenarios.py; the
pinned values in scenarios/goldens.json came from running those exported
files, so this test re-runs the same inputs and demands byte-identical
digests. Regenerate with the tool after an intentional behaviour change.
"""

import json
import os

import pytest

from proxysim.runner import run_scenario
from proxysim.scripts import BUILTIN_SCRIPTS, load_script

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def _goldens():
    with open(os.path.join(SCENARIO_DIR, "goldens.json"), encoding="utf-8") as fh:
        return json.load(fh)


def test_every_builtin_has_an_exported_file_and_golden():
    goldens = _goldens()
    assert sorted(goldens) == sorted(BUILTIN_SCRIPTS)
    for name in BUILTIN_SCRIPTS:
        assert os.path.exists(os.path.join(SCENARIO_DIR, f"{name}.json"))


@pytest.mark.parametrize("name", sorted(BUILTIN_SCRIPTS))
def test_exported_scenario_matches_golden(name):
    golden = _goldens()[name]
    script = load_script(os.path.join(SCENARIO_DIR, f"{name}.json"))
    metrics = run_scenario(script).metrics

    assert metrics.digest == golden["digest"]
    assert len(metrics.moves) == golden["moves"]
    assert metrics.illusion_breaks == golden["illusion_breaks"]
    assert metrics.min_slack_ms == pytest.approx(golden["min_slack_ms"], abs=1e-6)
    assert metrics.gesture_total == golden["gesture_total"]
    assert metrics.gesture_correct == golden["gesture_correct"]
    assert metrics.reassignments == golden["reassignments"]
    assert metrics.duration_ms == golden["duration_ms"]
    assert dict(sorted(metrics.checks.items())) == golden["checks"]
