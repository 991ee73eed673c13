"""Scenario scripts: a compact, validated event vocabulary that replaces
human subjects with deterministic synthesized motion.

Hand motion is synthesized by the runner as constant-speed straight lines
at 100 Hz; scripts carry only the high-level intent (carry this object to
that anchor, strike to this pose, perform this gesture). All builtin
scripts are generated by builders in this module and can be exported to
canonical JSON.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from proxysim.core import (
    DEFAULT_ARTIFICIAL_LATENCY_MS,
    DEFAULT_HAND_SPEED,
    TICK_MS,
    Pose2D,
    Workspace,
)

EVENT_TYPES = (
    "carry",
    "gesture",
    "place",
    "grasp-proxy",
    "release-proxy",
    "hand-move",
    "park",
    "pursuit",
    "check",
)

CHECK_KINDS = (
    "shared-agreement",
    "proxies-engaged",
    "gap-at-least",
    "pose-near",
    "focus-is",
    "active-is",
    "authority-is",
)

# Pause between a set-down and the next grasp: long enough for the remote
# proxy to settle (artificial latency plus margin), so every move starts
# from a clean anchor-to-anchor configuration.
MOVE_GAP_MS = DEFAULT_ARTIFICIAL_LATENCY_MS + 200


def ceil_ticks(ms: float) -> int:
    """Round a duration up to the tick grid."""
    return int(math.ceil(ms / TICK_MS)) * TICK_MS


class ScriptError(ValueError):
    """Script validation failure; ``violations`` lists every problem."""

    def __init__(self, violations: List[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass
class ScenarioScript:
    name: str
    sites: List[str]
    workspace: dict  # {"kind", "width", "depth", "anchors": "grid3" | "none"}
    objects: List[dict] = field(default_factory=list)
    proxies: List[dict] = field(default_factory=list)
    bindings: List[dict] = field(default_factory=list)
    events: List[dict] = field(default_factory=list)
    artificial_latency_ms: int = DEFAULT_ARTIFICIAL_LATENCY_MS
    hand_speed: float = DEFAULT_HAND_SPEED
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    # -- workspace -----------------------------------------------------------

    def build_workspace(self) -> Workspace:
        kind = self.workspace.get("kind", "tabletop")
        width = float(self.workspace.get("width", 0.9 if kind == "tabletop" else 4.0))
        depth = float(self.workspace.get("depth", width))
        anchors = self.workspace.get("anchors", "grid3" if kind == "tabletop" else "none")
        if anchors == "grid3":
            from proxysim.core import tile_grid

            return Workspace(kind, width, depth, anchors=tile_grid(width, depth))
        return Workspace(kind, width, depth, anchors=())

    # -- serialization ----------------------------------------------------------

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "sites": list(self.sites),
            "workspace": dict(self.workspace),
            "objects": [dict(o) for o in self.objects],
            "proxies": [dict(p) for p in self.proxies],
            "bindings": [dict(b) for b in self.bindings],
            "events": [dict(e) for e in self.events],
            "artificial_latency_ms": self.artificial_latency_ms,
            "hand_speed": self.hand_speed,
            "seed": self.seed,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioScript":
        return cls(
            name=d["name"],
            sites=list(d["sites"]),
            workspace=dict(d.get("workspace", {"kind": "tabletop"})),
            objects=list(d.get("objects", [])),
            proxies=list(d.get("proxies", [])),
            bindings=list(d.get("bindings", [])),
            events=list(d.get("events", [])),
            artificial_latency_ms=int(
                d.get("artificial_latency_ms", DEFAULT_ARTIFICIAL_LATENCY_MS)
            ),
            hand_speed=float(d.get("hand_speed", DEFAULT_HAND_SPEED)),
            seed=int(d.get("seed", 0)),
            metadata=dict(d.get("metadata", {})),
        )

    # -- validation ----------------------------------------------------------

    def validate(self) -> List[str]:
        """Collect every violation instead of stopping at the first."""
        v: List[str] = []
        if not self.name:
            v.append("script name is empty")
        if not self.sites:
            v.append("script declares no sites")
        if len(set(self.sites)) != len(self.sites):
            v.append("duplicate site ids")
        if self.artificial_latency_ms < 0:
            v.append("artificial_latency_ms must be >= 0")
        if self.hand_speed <= 0:
            v.append("hand_speed must be positive")

        try:
            ws = self.build_workspace()
        except (ValueError, KeyError) as exc:
            v.append(f"workspace invalid: {exc}")
            ws = None
        anchor_names = {name for name, _ in ws.anchors} if ws else set()

        object_ids = set()
        for o in self.objects:
            oid = o.get("id")
            if not oid:
                v.append("object without id")
            elif oid in object_ids:
                v.append(f"duplicate object id {oid!r}")
            else:
                object_ids.add(oid)
            if "pose" not in o:
                v.append(f"object {oid!r} missing pose")

        proxy_ids = set()
        for p in self.proxies:
            pid = p.get("id")
            if not pid:
                v.append("proxy without id")
            elif pid in proxy_ids:
                v.append(f"duplicate proxy id {pid!r}")
            else:
                proxy_ids.add(pid)
            if p.get("site") not in self.sites:
                v.append(f"proxy {pid!r} at undeclared site {p.get('site')!r}")
            if "pose" not in p:
                v.append(f"proxy {pid!r} missing pose")

        for i, b in enumerate(self.bindings):
            kind = b.get("kind")
            if kind not in ("one-to-one", "one-to-many", "many-to-one"):
                v.append(f"binding {i}: unknown kind {kind!r}")
            for vid in b.get("virtual", []):
                if vid not in object_ids:
                    v.append(f"binding {i}: unknown object {vid!r}")
            for pid, site in b.get("proxies", {}).items():
                if pid not in proxy_ids:
                    v.append(f"binding {i}: unknown proxy {pid!r}")
                if site not in self.sites:
                    v.append(f"binding {i}: unknown site {site!r}")

        last_at = None
        for i, e in enumerate(self.events):
            at = e.get("at")
            etype = e.get("type")
            where = f"event {i} ({etype})"
            if not isinstance(at, int) or at < 0:
                v.append(f"{where}: missing or negative 'at'")
            elif last_at is not None and at < last_at:
                v.append(f"{where}: out of time order ({at} < {last_at})")
            else:
                last_at = at
            if etype not in EVENT_TYPES:
                v.append(f"{where}: unknown type")
                continue
            site = e.get("site")
            if etype in ("carry", "gesture", "grasp-proxy", "release-proxy", "hand-move"):
                if site not in self.sites:
                    v.append(f"{where}: unknown site {site!r}")
            if etype in ("carry", "place") and e.get("object") not in object_ids:
                v.append(f"{where}: unknown object {e.get('object')!r}")
            if etype in ("grasp-proxy", "release-proxy", "park", "pursuit"):
                if e.get("proxy") not in proxy_ids:
                    v.append(f"{where}: unknown proxy {e.get('proxy')!r}")
            if etype in ("carry", "place", "hand-move", "park"):
                to = e.get("to")
                if isinstance(to, str):
                    if to not in anchor_names:
                        v.append(f"{where}: unknown anchor {to!r}")
                elif not (isinstance(to, dict) and "x" in to and "y" in to):
                    v.append(f"{where}: 'to' must be an anchor name or pose")
            if etype == "gesture":
                if e.get("kind") not in ("push", "pull", "slide"):
                    v.append(f"{where}: unknown gesture kind {e.get('kind')!r}")
                for key in ("wrist", "motion", "duration_ms", "speed"):
                    if key not in e:
                        v.append(f"{where}: missing {key!r}")
            if etype == "check" and e.get("kind") not in CHECK_KINDS:
                v.append(f"{where}: unknown check kind {e.get('kind')!r}")
        return v

    def require_valid(self) -> "ScenarioScript":
        violations = self.validate()
        if violations:
            raise ScriptError(violations)
        return self


def load_script(path: str) -> ScenarioScript:
    with open(path, "r", encoding="utf-8") as fh:
        return ScenarioScript.from_dict(json.load(fh)).require_valid()


def save_script(script: ScenarioScript, path: str) -> None:
    from proxysim.canon import canonical_json

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(script.as_dict()))
        fh.write("\n")


# -- geometry helpers ---------------------------------------------------------


def _tile_pose(k: int, width: float = 0.9, depth: float = 0.9) -> Tuple[float, float]:
    row, col = divmod(k - 1, 3)
    return ((col + 0.5) * width / 3.0, (row + 0.5) * depth / 3.0)


def _dist(a: Tuple[float, float], b: Tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _carry_duration_ms(d: float, speed: float) -> int:
    if d <= 0:
        return 0
    return ceil_ticks(1000.0 * d / speed)


def eulerian_tile_circuit() -> List[Tuple[int, int]]:
    """All 81 ordered tile pairs (including self-loops) as one closed walk.

    The complete digraph on 9 tiles with a self-loop per tile has equal
    in/out degree, so an Eulerian circuit exists; Hierholzer with sorted
    successor stacks makes it deterministic.
    """
    adj = {u: sorted(range(1, 10), reverse=True) for u in range(1, 10)}
    stack = [1]
    walk: List[int] = []
    while stack:
        u = stack[-1]
        if adj[u]:
            stack.append(adj[u].pop())
        else:
            walk.append(stack.pop())
    walk.reverse()
    edges = list(zip(walk, walk[1:]))
    assert len(edges) == 81
    return edges


# -- builtin builders ----------------------------------------------------------


def build_tictactoe() -> ScenarioScript:
    """Nine alternating moves of two controllers across two sites."""
    x_moves = [5, 1, 9, 3, 7]
    o_moves = [2, 4, 6, 8]
    x_at, o_at = 8, 6  # starting tiles
    objects = [
        {"id": "controller-x", "pose": _pose_dict(_tile_pose(x_at)), "visual_kind": "controller", "site": "A"},
        {"id": "controller-o", "pose": _pose_dict(_tile_pose(o_at)), "visual_kind": "controller", "site": "B"},
    ]
    proxies = [
        {"id": "proxy-x", "site": "B", "profile": "tabletop", "pose": _pose_dict(_tile_pose(x_at))},
        {"id": "proxy-o", "site": "A", "profile": "tabletop", "pose": _pose_dict(_tile_pose(o_at))},
    ]
    bindings = [
        {"kind": "one-to-one", "virtual": ["controller-x"], "proxies": {"proxy-x": "B"}},
        {"kind": "one-to-one", "virtual": ["controller-o"], "proxies": {"proxy-o": "A"}},
    ]
    events: List[dict] = []
    t = 500
    cur = {"controller-x": x_at, "controller-o": o_at}
    hands = {"controller-x": ("A", "hand-a"), "controller-o": ("B", "hand-b")}
    for i in range(9):
        if i % 2 == 0:
            obj, tile = "controller-x", x_moves[i // 2]
        else:
            obj, tile = "controller-o", o_moves[i // 2]
        site, hand = hands[obj]
        events.append(
            {"at": t, "type": "carry", "site": site, "hand": hand, "object": obj, "to": f"tile-{tile}"}
        )
        d = _dist(_tile_pose(cur[obj]), _tile_pose(tile))
        cur[obj] = tile
        t += _carry_duration_ms(d, DEFAULT_HAND_SPEED) + MOVE_GAP_MS
    return ScenarioScript(
        name="tictactoe",
        sites=["A", "B"],
        workspace={"kind": "tabletop", "width": 0.9, "depth": 0.9, "anchors": "grid3"},
        objects=objects,
        proxies=proxies,
        bindings=bindings,
        events=events,
        metadata={"moves": 9},
    )


def build_tictactoe_81() -> ScenarioScript:
    """Every ordered tile pair (81 moves) for the latency-budget analysis."""
    edges = eulerian_tile_circuit()
    objects = [
        {"id": "controller", "pose": _pose_dict(_tile_pose(1)), "visual_kind": "controller", "site": "A"}
    ]
    proxies = [
        {"id": "proxy-remote", "site": "B", "profile": "tabletop", "pose": _pose_dict(_tile_pose(1))}
    ]
    bindings = [
        {"kind": "one-to-one", "virtual": ["controller"], "proxies": {"proxy-remote": "B"}}
    ]
    events: List[dict] = []
    t = 500
    for u, tile in edges:
        events.append(
            {
                "at": t,
                "type": "carry",
                "site": "A",
                "hand": "hand-a",
                "object": "controller",
                "to": f"tile-{tile}",
            }
        )
        d = _dist(_tile_pose(u), _tile_pose(tile))
        t += _carry_duration_ms(d, DEFAULT_HAND_SPEED) + MOVE_GAP_MS
    return ScenarioScript(
        name="tictactoe-81",
        sites=["A", "B"],
        workspace={"kind": "tabletop", "width": 0.9, "depth": 0.9, "anchors": "grid3"},
        objects=objects,
        proxies=proxies,
        bindings=bindings,
        events=events,
        metadata={"moves": 81},
    )


def build_telekinesis() -> ScenarioScript:
    """Nine gesture trials: one per tile area, with the expected anchor."""
    trials = []
    for area in (1, 2, 3):  # far row: pull toward the user
        trials.append((area, "pull", f"tile-{area + 6}"))
    for area in (7, 8, 9):  # near row: push away
        trials.append((area, "push", f"tile-{area - 6}"))
    trials.append((4, "slide", "tile-5"))
    trials.append((5, "slide", "tile-6"))
    trials.append((6, "slide", "tile-5"))

    objects = [
        {"id": "mug", "pose": _pose_dict(_tile_pose(1)), "visual_kind": "mug", "site": "A"}
    ]
    proxies = [
        {"id": "proxy-mug", "site": "A", "profile": "tabletop", "pose": _pose_dict(_tile_pose(1))}
    ]
    bindings = [
        {"kind": "one-to-one", "virtual": ["mug"], "proxies": {"proxy-mug": "A"}}
    ]
    events: List[dict] = []
    t = 500
    facing = -math.pi / 2  # user at the near edge looking across the table
    for area, kind, expect in trials:
        ax, ay = _tile_pose(area)
        events.append(
            {"at": t, "type": "place", "object": "mug", "to": f"tile-{area}", "with_proxy": True}
        )
        if kind == "pull":
            wrist = {"x": ax, "y": 0.78, "heading": facing}
            motion = {"x": 0.0, "y": 1.0}
        elif kind == "push":
            wrist = {"x": ax, "y": 0.9, "heading": facing}
            motion = {"x": 0.0, "y": -1.0}
        else:  # slide
            wrist = {"x": ax, "y": 0.9, "heading": facing}
            motion = {"x": 1.0 if area in (4, 5) else -1.0, "y": 0.0}
        events.append(
            {
                "at": t + 200,
                "type": "gesture",
                "site": "A",
                "hand": "hand-a",
                "kind": kind,
                "wrist": wrist,
                "motion": motion,
                "duration_ms": 300,
                "speed": 0.3,
                "expect_object": "mug",
                "expect_anchor": expect,
            }
        )
        t += 4000
    return ScenarioScript(
        name="telekinesis",
        sites=["A"],
        workspace={"kind": "tabletop", "width": 0.9, "depth": 0.9, "anchors": "grid3"},
        objects=objects,
        proxies=proxies,
        bindings=bindings,
        events=events,
        metadata={"trials": len(trials)},
    )


def build_city_builder() -> ScenarioScript:
    """Six buildings, two pooled proxies: focus-driven dispatch with a
    tie-break, a staged obstacle, and a carry whose pursuit must detour."""
    buildings = {
        "b1": (0.15, 0.2),
        "b2": (0.45, 0.2),
        "b3": (0.75, 0.2),
        "b4": (0.15, 0.5),
        "b5": (0.45, 0.5),
        "b6": (0.75, 0.5),
    }
    objects = [
        {"id": bid, "pose": _pose_dict(p), "visual_kind": "building", "site": "A"}
        for bid, p in sorted(buildings.items())
    ]
    proxies = [
        {"id": "p1", "site": "A", "profile": "tabletop", "pose": _pose_dict((0.15, 0.85), -math.pi / 2)},
        {"id": "p2", "site": "A", "profile": "tabletop", "pose": _pose_dict((0.45, 0.85), -math.pi / 2)},
    ]
    bindings = [
        {
            "kind": "one-to-many",
            "virtual": sorted(buildings),
            "proxies": {"p1": "A", "p2": "A"},
        }
    ]
    events = [
        {"at": 200, "type": "hand-move", "site": "A", "hand": "hand-a", "to": {"x": 0.2, "y": 0.55}, "teleport": True},
        {"at": 2400, "type": "check", "name": "focus-b4", "kind": "focus-is", "hand": "hand-a", "value": "b4"},
        {"at": 2400, "type": "check", "name": "active-p1", "kind": "active-is", "site": "A", "value": "p1"},
        {"at": 2500, "type": "hand-move", "site": "A", "hand": "hand-a", "to": {"x": 0.7, "y": 0.55}, "teleport": True},
        {"at": 5300, "type": "check", "name": "focus-b6", "kind": "focus-is", "hand": "hand-a", "value": "b6"},
        {"at": 5300, "type": "check", "name": "active-p2", "kind": "active-is", "site": "A", "value": "p2"},
        {"at": 5500, "type": "hand-move", "site": "A", "hand": "hand-a", "to": {"x": 0.18, "y": 0.53}, "teleport": True},
        {"at": 5600, "type": "check", "name": "active-back-p1", "kind": "active-is", "site": "A", "value": "p1"},
        # stage p2 onto the upcoming carry corridor to force a detour
        {"at": 6000, "type": "park", "proxy": "p2", "to": {"x": 0.45, "y": 0.575}},
        {"at": 8000, "type": "carry", "site": "A", "hand": "hand-a", "object": "b4", "to": {"x": 0.75, "y": 0.65}},
        {"at": 14000, "type": "check", "name": "b4-delivered", "kind": "pose-near", "object": "b4", "to": {"x": 0.75, "y": 0.65}, "eps": 0.02},
    ]
    return ScenarioScript(
        name="city-builder",
        sites=["A"],
        workspace={"kind": "tabletop", "width": 0.9, "depth": 0.9, "anchors": "none"},
        objects=objects,
        proxies=proxies,
        bindings=bindings,
        events=events,
        metadata={"buildings": 6, "pool": 2},
    )


def build_clink_mugs() -> ScenarioScript:
    """Two shared mugs across two sites: synchronized strike, convergence,
    then a grasp race resolved by earliest timestamp."""
    mug_a, mug_b = (0.15, 0.45), (0.75, 0.45)
    strike_a, strike_b = (0.39, 0.45), (0.51, 0.45)
    objects = [
        {"id": "mug-a", "pose": _pose_dict(mug_a), "visual_kind": "mug", "site": "A"},
        {"id": "mug-b", "pose": _pose_dict(mug_b), "visual_kind": "mug", "site": "B"},
    ]
    proxies = [
        {"id": "pa-A", "site": "A", "profile": "tabletop", "pose": _pose_dict(mug_a)},
        {"id": "pa-B", "site": "B", "profile": "tabletop", "pose": _pose_dict(mug_a)},
        {"id": "pb-A", "site": "A", "profile": "tabletop", "pose": _pose_dict(mug_b)},
        {"id": "pb-B", "site": "B", "profile": "tabletop", "pose": _pose_dict(mug_b)},
    ]
    bindings = [
        {"kind": "many-to-one", "virtual": ["mug-a"], "proxies": {"pa-A": "A", "pa-B": "B"}},
        {"kind": "many-to-one", "virtual": ["mug-b"], "proxies": {"pb-A": "A", "pb-B": "B"}},
    ]
    events = [
        {"at": 200, "type": "grasp-proxy", "site": "A", "hand": "hand-a", "proxy": "pa-A", "object": "mug-a"},
        {"at": 200, "type": "grasp-proxy", "site": "B", "hand": "hand-b", "proxy": "pb-B", "object": "mug-b"},
        {"at": 400, "type": "hand-move", "site": "A", "hand": "hand-a", "to": _pose_dict(strike_a), "speed": 0.2},
        {"at": 400, "type": "hand-move", "site": "B", "hand": "hand-b", "to": _pose_dict(strike_b), "speed": 0.2},
        {"at": 2400, "type": "check", "name": "strike-gap", "kind": "gap-at-least", "objects": ["mug-a", "mug-b"], "value": 0.1},
        {"at": 2400, "type": "check", "name": "mirror-a", "kind": "shared-agreement", "object": "mug-a", "eps": 0.01},
        {"at": 2400, "type": "check", "name": "mirror-b", "kind": "shared-agreement", "object": "mug-b", "eps": 0.01},
        {"at": 2400, "type": "check", "name": "mirrors-engaged", "kind": "proxies-engaged", "proxies": ["pa-B", "pb-A"]},
        {"at": 2600, "type": "release-proxy", "site": "A", "hand": "hand-a", "proxy": "pa-A", "object": "mug-a"},
        {"at": 2600, "type": "release-proxy", "site": "B", "hand": "hand-b", "proxy": "pb-B", "object": "mug-b"},
        {"at": 3200, "type": "check", "name": "quiescent-a", "kind": "shared-agreement", "object": "mug-a", "eps": 0.01},
        {"at": 3200, "type": "check", "name": "quiescent-b", "kind": "shared-agreement", "object": "mug-b", "eps": 0.01},
        # grasp race on mug-a: A at 3300, B at 3310 -> A keeps authority
        {"at": 3300, "type": "grasp-proxy", "site": "A", "hand": "hand-a", "proxy": "pa-A", "object": "mug-a"},
        {"at": 3310, "type": "grasp-proxy", "site": "B", "hand": "hand-b", "proxy": "pa-B", "object": "mug-a"},
        {"at": 3400, "type": "check", "name": "race-winner", "kind": "authority-is", "object": "mug-a", "value": "A"},
        {"at": 3500, "type": "release-proxy", "site": "A", "hand": "hand-a", "proxy": "pa-A", "object": "mug-a"},
    ]
    return ScenarioScript(
        name="clink-mugs",
        sites=["A", "B"],
        workspace={"kind": "tabletop", "width": 0.9, "depth": 0.9, "anchors": "grid3"},
        objects=objects,
        proxies=proxies,
        bindings=bindings,
        events=events,
        metadata={"strike_gap_m": 0.12},
    )


def build_wall_push() -> ScenarioScript:
    """Floor-scale wall: the proxy wall section continuously tracks the
    user's projected touch point along a much longer virtual wall."""
    wall_y, x_min, x_max = 3.0, 0.5, 3.5
    objects = [
        {"id": "wall", "pose": _pose_dict((2.0, wall_y)), "visual_kind": "wall", "site": "A"}
    ]
    proxies = [
        {"id": "wall-bot", "site": "A", "profile": "floor", "pose": _pose_dict((x_min, wall_y))}
    ]
    events = [
        {"at": 200, "type": "hand-move", "site": "A", "hand": "hand-a", "to": {"x": x_min, "y": 2.5}, "teleport": True},
        {
            "at": 300,
            "type": "pursuit",
            "proxy": "wall-bot",
            "hand": "hand-a",
            "project": {"axis": "x", "y": wall_y, "min": x_min, "max": x_max},
            "until": 26000,
        },
        {"at": 300, "type": "hand-move", "site": "A", "hand": "hand-a", "to": {"x": x_max, "y": 2.5}, "speed": 0.2},
        {"at": 15400, "type": "hand-move", "site": "A", "hand": "hand-a", "to": {"x": 1.5, "y": 2.5}, "speed": 0.2},
    ]
    return ScenarioScript(
        name="wall-push",
        sites=["A"],
        workspace={"kind": "floor", "width": 4.0, "depth": 4.0, "anchors": "none"},
        objects=objects,
        proxies=proxies,
        bindings=[],
        events=events,
        metadata={
            "wall": {"y": wall_y, "x_min": x_min, "x_max": x_max, "virtual_length": x_max - x_min},
            "tracking_tolerance_m": 0.05,
        },
    )


def _pose_dict(xy, heading: float = 0.0) -> dict:
    if isinstance(xy, dict):
        return {"x": xy["x"], "y": xy["y"], "heading": xy.get("heading", heading)}
    return {"x": xy[0], "y": xy[1], "heading": heading}


BUILTIN_SCRIPTS = {
    "tictactoe": build_tictactoe,
    "tictactoe-81": build_tictactoe_81,
    "telekinesis": build_telekinesis,
    "city-builder": build_city_builder,
    "clink-mugs": build_clink_mugs,
    "wall-push": build_wall_push,
}


def builtin_script(name: str) -> ScenarioScript:
    try:
        builder = BUILTIN_SCRIPTS[name]
    except KeyError:
        raise KeyError(
            f"unknown script {name!r}; builtins: {', '.join(sorted(BUILTIN_SCRIPTS))}"
        ) from None
    return builder().require_valid()
