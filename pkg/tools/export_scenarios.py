"""Export builtin scenarios to scenarios/*.json and pin golden outcomes.

Goldens are produced by running the exported files (not the in-memory
builders) so that canonical-JSON float rounding is part of what is pinned.
Run from the repository root:

    python3 tools/export_scenarios.py
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from proxysim.canon import canonical_json
from proxysim.runner import run_scenario
from proxysim.scripts import BUILTIN_SCRIPTS, builtin_script, load_script, save_script


def main() -> None:
    root = os.path.join(os.path.dirname(__file__), "..")
    out_dir = os.path.join(root, "scenarios")
    os.makedirs(out_dir, exist_ok=True)

    goldens = {}
    for name in sorted(BUILTIN_SCRIPTS):
        path = os.path.join(out_dir, f"{name}.json")
        save_script(builtin_script(name), path)
        metrics = run_scenario(load_script(path)).metrics
        goldens[name] = {
            "digest": metrics.digest,
            "moves": len(metrics.moves),
            "illusion_breaks": metrics.illusion_breaks,
            "min_slack_ms": metrics.min_slack_ms,
            "gesture_total": metrics.gesture_total,
            "gesture_correct": metrics.gesture_correct,
            "reassignments": metrics.reassignments,
            "duration_ms": metrics.duration_ms,
            "checks": dict(sorted(metrics.checks.items())),
        }
        print(f"{name:14s} digest {metrics.digest[:12]}  "
              f"moves {len(metrics.moves):3d}  breaks {metrics.illusion_breaks}")

    golden_path = os.path.join(out_dir, "goldens.json")
    with open(golden_path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(goldens))
        fh.write("\n")
    print(f"wrote {golden_path}")


if __name__ == "__main__":
    main()
