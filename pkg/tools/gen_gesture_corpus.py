"""Regenerate the golden wrist-gesture corpus.

Each JSON file is one recorded wrist track with the label the classifier
must produce (``expected: null`` for sub-threshold motion). The generator
replays every track through GestureStream before writing, so a corpus that
disagrees with the classifier can never be checked in.

Usage: python tools/gen_gesture_corpus.py
"""

from __future__ import annotations

import json
import math
import os
import random
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from proxysim.gesture import GestureStream, WristSample  # noqa: E402
from proxysim.core import Pose2D  # noqa: E402

OUT_DIR = os.path.join(
    os.path.dirname(__file__), "..", "src", "proxysim", "data", "gestures"
)

DURATION_MS = 300
KINDS = ("push", "pull", "slide")


def build_track(rng: random.Random, kind: str, positive: bool) -> dict:
    """One wrist track: constant velocity plus small jitter.

    Positive tracks move at 0.3-0.6 m/s along the axis the kind implies;
    negatives use the same geometry at 0.05-0.13 m/s so no window can reach
    the 0.2 m/s trigger.
    """
    facing = rng.uniform(-math.pi, math.pi)
    speed = rng.uniform(0.3, 0.6) if positive else rng.uniform(0.05, 0.13)
    if kind == "push":
        direction = facing
    elif kind == "pull":
        direction = facing + math.pi
    else:  # slide: lateral, either side
        direction = facing + rng.choice((1, -1)) * math.pi / 2
    step_ms = rng.choice((10, 10, 15, 20))
    x, y = rng.uniform(0.2, 0.7), rng.uniform(0.2, 0.7)
    samples = []
    for t in range(0, DURATION_MS + step_ms, step_ms):
        jx = rng.uniform(-0.001, 0.001)
        jy = rng.uniform(-0.001, 0.001)
        wobble = rng.uniform(-0.03, 0.03)
        samples.append(
            {
                "x": round(x + speed * (t / 1000.0) * math.cos(direction) + jx, 6),
                "y": round(y + speed * (t / 1000.0) * math.sin(direction) + jy, 6),
                "heading": round(facing + wobble, 6),
                "timestamp": t,
            }
        )
    return {
        "expected": kind if positive else None,
        "samples": samples,
    }


def replay(track: dict, user_id: str):
    stream = GestureStream(user_id)
    events = []
    for s in track["samples"]:
        ev = stream.push_sample(WristSample.from_dict(user_id, s))
        if ev is not None:
            events.append(ev)
    return events


def main() -> None:
    rng = random.Random(7)
    os.makedirs(OUT_DIR, exist_ok=True)
    written = 0
    for kind in KINDS:
        for i in range(12):
            positive = i < 9  # 9 positives, 3 sub-threshold negatives per kind
            name = f"{kind}-{i:02d}" if positive else f"{kind}-neg-{i - 9:02d}"
            user_id = f"user-{kind}-{i:02d}"
            for attempt in range(100):
                track = build_track(rng, kind, positive)
                events = replay(track, user_id)
                got = events[0].kind if events else None
                if got == track["expected"]:
                    break
            else:
                raise SystemExit(f"could not build a valid track for {name}")
            doc = {"name": name, "user_id": user_id, **track}
            path = os.path.join(OUT_DIR, f"{name}.json")
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, indent=1, sort_keys=True)
                fh.write("\n")
            written += 1
    print(f"wrote {written} tracks to {os.path.relpath(OUT_DIR)}")


if __name__ == "__main__":
    main()
