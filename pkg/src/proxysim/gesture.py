"""Wrist-gesture recognition (push / pull / slide) and target resolution.

Classification is a pure function of a wrist-sample window: the mean wrist
velocity is projected onto the facing direction; a strong forward component
is a push, backward is a pull, and a dominant lateral component is a slide.
A per-user stream wrapper enforces the refractory period between events.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from proxysim.core import Pose2D, TrackedFrame, VirtualObject, Workspace, distance
from proxysim.retarget import min_anchor_spacing

SPEED_THRESHOLD = 0.2  # m/s, projection magnitude required to trigger
WINDOW_MS = 150
REFRACTORY_MS = 400
CONE_HALF_ANGLE = math.pi / 3  # targets must lie within 60 degrees of facing

GESTURE_KINDS = ("push", "pull", "slide")


@dataclass(frozen=True)
class WristSample:
    """One wrist tracking sample; heading encodes the facing direction."""

    user_id: str
    pose: Pose2D
    timestamp: int

    @classmethod
    def from_dict(cls, user_id: str, d: dict) -> "WristSample":
        return cls(
            user_id,
            Pose2D(d["x"], d["y"], d.get("heading", 0.0)),
            d["timestamp"],
        )


@dataclass(frozen=True)
class GestureEvent:
    user_id: str
    kind: str  # push | pull | slide
    direction: Tuple[float, float]  # unit vector
    magnitude: float  # m/s, peak speed within the window
    at: int  # ms

    def as_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "kind": self.kind,
            "direction": {"x": self.direction[0], "y": self.direction[1]},
            "magnitude": self.magnitude,
            "at": self.at,
        }


def _mean_velocity(window: Sequence[WristSample]) -> Tuple[float, float, float]:
    """(vx, vy, peak_speed) over the window; mean is displacement over span."""
    first, last = window[0], window[-1]
    span_s = (last.timestamp - first.timestamp) / 1000.0
    vx = (last.pose.x - first.pose.x) / span_s
    vy = (last.pose.y - first.pose.y) / span_s
    peak = 0.0
    for a, b in zip(window, window[1:]):
        dt = (b.timestamp - a.timestamp) / 1000.0
        if dt <= 0.0:
            continue
        s = distance(a.pose, b.pose) / dt
        if s > peak:
            peak = s
    return vx, vy, peak


def classify(
    window: List[WristSample],
    *,
    speed_threshold: float = SPEED_THRESHOLD,
    window_ms: int = WINDOW_MS,
) -> Optional[GestureEvent]:
    """Classify one wrist window; sub-threshold motion yields None.

    The facing direction is taken from the newest sample. Slide wins when
    the lateral speed dominates the forward speed; otherwise the forward
    projection decides push (+) versus pull (−).
    """
    if len(window) < 2:
        return None
    span = window[-1].timestamp - window[0].timestamp
    if span < window_ms:
        return None
    vx, vy, peak = _mean_velocity(window)
    facing = window[-1].pose.heading
    fx, fy = math.cos(facing), math.sin(facing)
    proj = vx * fx + vy * fy
    lateral = vx * (-fy) + vy * fx  # component along facing rotated +90°
    user_id = window[-1].user_id
    at = window[-1].timestamp
    if abs(lateral) > abs(proj) and abs(lateral) >= speed_threshold:
        sign = 1.0 if lateral > 0 else -1.0
        return GestureEvent(user_id, "slide", (-fy * sign, fx * sign), peak, at)
    if proj >= speed_threshold:
        return GestureEvent(user_id, "push", (fx, fy), peak, at)
    if proj <= -speed_threshold:
        return GestureEvent(user_id, "pull", (-fx, -fy), peak, at)
    return None


class GestureStream:
    """Streaming classifier for one user: feeds a sliding window into
    classify() and enforces the refractory period between events."""

    def __init__(
        self,
        user_id: str,
        *,
        window_ms: int = WINDOW_MS,
        refractory_ms: int = REFRACTORY_MS,
        speed_threshold: float = SPEED_THRESHOLD,
    ):
        self.user_id = user_id
        self.window_ms = window_ms
        self.refractory_ms = refractory_ms
        self.speed_threshold = speed_threshold
        self._window: deque = deque()
        self._last_event_at: Optional[int] = None

    def push_sample(self, sample: WristSample) -> Optional[GestureEvent]:
        if self._window and sample.timestamp <= self._window[-1].timestamp:
            raise ValueError("wrist samples must strictly increase in time")
        self._window.append(sample)
        horizon = sample.timestamp - self.window_ms
        while self._window and self._window[0].timestamp < horizon:
            self._window.popleft()
        if (
            self._last_event_at is not None
            and sample.timestamp - self._last_event_at < self.refractory_ms
        ):
            return None
        event = classify(
            list(self._window),
            speed_threshold=self.speed_threshold,
            window_ms=self.window_ms,
        )
        if event is not None:
            self._last_event_at = event.at
        return event


def _anchor_along(
    origin: Pose2D,
    direction: Tuple[float, float],
    workspace: Workspace,
    farthest: bool,
) -> Optional[Tuple[str, Pose2D]]:
    """Anchor ahead of ``origin`` along ``direction`` within a corridor half
    the minimum anchor spacing wide; farthest or nearest by projection."""
    if not workspace.anchors:
        return None
    ux, uy = direction
    norm = math.sqrt(ux * ux + uy * uy)
    if norm == 0.0:
        return None
    ux, uy = ux / norm, uy / norm
    half_corridor = 0.5 * min_anchor_spacing(workspace.anchor_poses())
    best = None
    for name, anchor in workspace.anchors:
        dx, dy = anchor.x - origin.x, anchor.y - origin.y
        ahead = dx * ux + dy * uy
        lateral = abs(dx * uy - dy * ux)
        if ahead > 1e-9 and lateral <= half_corridor:
            key = (-ahead if farthest else ahead, name)
            if best is None or key < best[0]:
                best = (key, name, anchor)
    if best is None:
        return None
    return best[1], best[2]


def resolve_target(
    event: GestureEvent,
    user: TrackedFrame,
    objects: Mapping[str, VirtualObject],
    workspace: Workspace,
) -> Optional[Tuple[str, Pose2D]]:
    """Map a gesture to (object id, goal pose); None when no object lies
    within the facing cone.

    push: the object nearest the user flies to the farthest in-bounds
    anchor along the gesture direction. pull: the object nearest the
    outward gesture ray comes to the anchor nearest the user. slide: the
    object nearest the user steps to the nearest anchor along the lateral
    direction. Objects already at their goal resolve to a no-op.
    """
    if not objects:
        raise ValueError("resolve_target requires at least one object")
    fx, fy = math.cos(user.pose.heading), math.sin(user.pose.heading)
    candidates = []
    for obj in objects.values():
        dx, dy = obj.pose.x - user.pose.x, obj.pose.y - user.pose.y
        reach = math.sqrt(dx * dx + dy * dy)
        if reach == 0.0:
            candidates.append(obj)
            continue
        cos_angle = (dx * fx + dy * fy) / reach
        cos_angle = min(1.0, max(-1.0, cos_angle))
        if math.acos(cos_angle) <= CONE_HALF_ANGLE:
            candidates.append(obj)
    if not candidates:
        return None

    if event.kind == "pull":
        # outward ray from the user; selection by lateral distance to it
        ox, oy = -event.direction[0], -event.direction[1]

        def ray_distance(obj: VirtualObject) -> float:
            dx, dy = obj.pose.x - user.pose.x, obj.pose.y - user.pose.y
            return abs(dx * oy - dy * ox)

        obj = min(candidates, key=lambda o: (ray_distance(o), o.id))
        anchor = workspace.nearest_anchor(user.pose)
        goal = anchor[1] if anchor else obj.pose
        return obj.id, goal

    obj = min(candidates, key=lambda o: (distance(o.pose, user.pose), o.id))
    if event.kind == "push":
        found = _anchor_along(obj.pose, event.direction, workspace, farthest=True)
    else:  # slide
        found = _anchor_along(obj.pose, event.direction, workspace, farthest=False)
    if found is None:
        anchor = workspace.nearest_anchor(obj.pose)
        goal = anchor[1] if anchor else obj.pose
    else:
        goal = found[1]
    return obj.id, goal
