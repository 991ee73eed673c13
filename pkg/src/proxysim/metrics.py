"""Run metrics: per-move slack records, scenario checks, and exporters."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from proxysim.canon import canonical_json

MOVE_CSV_COLUMNS = [
    "move",
    "object_id",
    "proxy_id",
    "kind",
    "grasp_ms",
    "release_ms",
    "display_ms",
    "arrival_ms",
    "slack_ms",
    "distance_m",
    "waypoints",
    "revisions",
    "best_effort",
    "illusion_break",
]


@dataclass
class MoveRecord:
    """One retarget task from grasp to displayed set-down."""

    move: int
    object_id: str
    proxy_id: str
    kind: str  # carry | gesture | converge
    grasp_ms: int
    release_ms: Optional[int] = None
    display_ms: Optional[float] = None
    arrival_ms: Optional[float] = None
    slack_ms: Optional[float] = None
    distance_m: float = 0.0
    waypoints: int = 0
    revisions: int = 0
    best_effort: bool = False
    illusion_break: bool = False
    from_anchor: Optional[str] = None
    to_anchor: Optional[str] = None

    def as_dict(self) -> dict:
        return {
            "move": self.move,
            "object_id": self.object_id,
            "proxy_id": self.proxy_id,
            "kind": self.kind,
            "grasp_ms": self.grasp_ms,
            "release_ms": self.release_ms,
            "display_ms": self.display_ms,
            "arrival_ms": self.arrival_ms,
            "slack_ms": self.slack_ms,
            "distance_m": self.distance_m,
            "waypoints": self.waypoints,
            "revisions": self.revisions,
            "best_effort": self.best_effort,
            "illusion_break": self.illusion_break,
            "from_anchor": self.from_anchor,
            "to_anchor": self.to_anchor,
        }


def percentile(values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile; 0 for an empty sequence."""
    if not values:
        return 0.0
    ordered = sorted(values)
    rank = max(1, math.ceil(q / 100.0 * len(ordered)))
    return float(ordered[rank - 1])


@dataclass
class RunMetrics:
    scenario: str
    moves: List[MoveRecord] = field(default_factory=list)
    illusion_breaks: int = 0
    reassignments: int = 0
    gesture_total: int = 0
    gesture_correct: int = 0
    relay_latency_p50: float = 0.0
    relay_latency_p95: float = 0.0
    relay_latency_max: float = 0.0
    checks: Dict[str, bool] = field(default_factory=dict)
    min_clearance_m: Optional[float] = None
    max_speed_ratio: float = 0.0
    max_turn_ratio: float = 0.0
    duration_ms: int = 0
    digest: str = ""

    @property
    def gesture_accuracy(self) -> float:
        if self.gesture_total == 0:
            return 1.0
        return self.gesture_correct / self.gesture_total

    @property
    def min_slack_ms(self) -> Optional[float]:
        slacks = [m.slack_ms for m in self.moves if m.slack_ms is not None]
        return min(slacks) if slacks else None

    @property
    def all_checks_pass(self) -> bool:
        return all(self.checks.values())

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "moves": [m.as_dict() for m in self.moves],
            "illusion_breaks": self.illusion_breaks,
            "reassignments": self.reassignments,
            "gesture_total": self.gesture_total,
            "gesture_correct": self.gesture_correct,
            "gesture_accuracy": self.gesture_accuracy,
            "relay_latency_p50": self.relay_latency_p50,
            "relay_latency_p95": self.relay_latency_p95,
            "relay_latency_max": self.relay_latency_max,
            "checks": dict(sorted(self.checks.items())),
            "min_clearance_m": self.min_clearance_m,
            "min_slack_ms": self.min_slack_ms,
            "max_speed_ratio": self.max_speed_ratio,
            "max_turn_ratio": self.max_turn_ratio,
            "duration_ms": self.duration_ms,
            "digest": self.digest,
        }

    # -- exports -------------------------------------------------------------

    def to_json(self) -> str:
        return canonical_json(self.as_dict())

    def moves_to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=MOVE_CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for m in self.moves:
            row = m.as_dict()
            row["best_effort"] = int(row["best_effort"])
            row["illusion_break"] = int(row["illusion_break"])
            writer.writerow(row)
        return out.getvalue()


SUMMARY_CSV_COLUMNS = [
    "scenario",
    "parameter",
    "value",
    "moves",
    "illusion_breaks",
    "min_slack_ms",
    "reassignments",
    "gesture_accuracy",
    "relay_latency_p95",
    "checks_pass",
    "digest",
]


def summary_row(
    metrics: RunMetrics, parameter: str = "", value: object = ""
) -> Dict[str, object]:
    return {
        "scenario": metrics.scenario,
        "parameter": parameter,
        "value": value,
        "moves": len(metrics.moves),
        "illusion_breaks": metrics.illusion_breaks,
        "min_slack_ms": metrics.min_slack_ms,
        "reassignments": metrics.reassignments,
        "gesture_accuracy": metrics.gesture_accuracy,
        "relay_latency_p95": metrics.relay_latency_p95,
        "checks_pass": int(metrics.all_checks_pass),
        "digest": metrics.digest,
    }


def sweep_to_csv(rows: List[Dict[str, object]]) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=SUMMARY_CSV_COLUMNS, extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return out.getvalue()


def load_metrics_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
