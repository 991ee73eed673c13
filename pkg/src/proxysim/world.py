"""Single-writer world state advanced by a fixed-step tick loop.

All mutation funnels through World.advance_tick so that a run is a pure
function of its inputs: same frames and plans in, bit-identical snapshots
and digests out, regardless of wall clock or compute backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

from proxysim.canon import RollingDigest
from proxysim.core import (
    TICK_MS,
    Pose2D,
    RobotProxy,
    TrackedFrame,
    VirtualObject,
    Workspace,
    check_frames_monotonic,
    distance,
)
from proxysim.kernel import wrap_angle
from proxysim.motion import MotionPlan, execute_tick

SPEED_TOLERANCE = 1e-9


class SpeedLawViolation(RuntimeError):
    """A self-propelled proxy moved farther in one tick than its limit allows."""


@dataclass(frozen=True)
class WorldState:
    """Immutable per-tick snapshot used for digests and streaming."""

    time_ms: int
    objects: dict
    proxies: dict
    hands: dict

    def as_dict(self) -> dict:
        return {
            "time_ms": self.time_ms,
            "objects": self.objects,
            "proxies": self.proxies,
            "hands": self.hands,
        }


class World:
    """Owns every mutable entity; the only writer is advance_tick."""

    def __init__(self, workspace: Workspace, tick_ms: int = TICK_MS):
        if tick_ms <= 0:
            raise ValueError("tick_ms must be positive")
        self.workspace = workspace
        self.tick_ms = tick_ms
        self.time_ms = 0
        self.objects: Dict[str, VirtualObject] = {}
        self.proxies: Dict[str, RobotProxy] = {}
        self.hands: Dict[str, Pose2D] = {}
        self.plans: Dict[str, MotionPlan] = {}
        self.carried_by: Dict[str, str] = {}  # proxy id -> hand subject id
        self.arrivals: Dict[str, float] = {}  # proxy id -> completion time, float ms
        self.speed_audit: Dict[str, float] = {}  # proxy id -> max per-tick speed ratio
        self.turn_audit: Dict[str, float] = {}  # proxy id -> max per-tick turn ratio
        self.min_clearance: Optional[float] = None  # min pairwise gap minus footprints
        self.digest = RollingDigest()
        self._last_seen: Dict[str, int] = {}

    # -- construction -----------------------------------------------------

    def add_object(self, obj: VirtualObject) -> VirtualObject:
        if obj.id in self.objects:
            raise ValueError(f"duplicate object id {obj.id!r}")
        self.objects[obj.id] = obj
        return obj

    def add_proxy(self, proxy: RobotProxy) -> RobotProxy:
        if proxy.id in self.proxies:
            raise ValueError(f"duplicate proxy id {proxy.id!r}")
        self.proxies[proxy.id] = proxy
        return proxy

    # -- plan management ---------------------------------------------------

    def set_plan(self, plan: MotionPlan) -> None:
        proxy = self.proxies[plan.proxy_id]
        self.plans[plan.proxy_id] = plan
        if proxy.state == "idle":
            proxy.state = "repositioning"

    def clear_plan(self, proxy_id: str) -> None:
        self.plans.pop(proxy_id, None)
        proxy = self.proxies[proxy_id]
        if proxy.state == "repositioning":
            proxy.state = "idle"

    def set_carried(self, proxy_id: str, hand_id: Optional[str]) -> None:
        proxy = self.proxies[proxy_id]
        if hand_id is None:
            self.carried_by.pop(proxy_id, None)
            proxy.carried = False
        else:
            self.carried_by[proxy_id] = hand_id
            proxy.carried = True
            self.plans.pop(proxy_id, None)

    # -- tick loop ----------------------------------------------------------

    def advance_tick(self, frames: Iterable[TrackedFrame] = ()) -> WorldState:
        """Advance time by one tick: ingest tracking, move held bodies, then
        execute motion plans in proxy-id order. Returns the new snapshot and
        folds it into the rolling digest."""
        t0 = self.time_ms
        t1 = t0 + self.tick_ms
        frames = list(frames)
        check_frames_monotonic(frames, self._last_seen, t0, t1)
        for f in frames:
            self.hands[f.subject_id] = f.pose

        for obj in self.objects.values():
            if obj.held_by is not None and obj.held_by in self.hands:
                obj.pose = self.hands[obj.held_by]
        for proxy_id, hand_id in self.carried_by.items():
            if hand_id in self.hands:
                self.proxies[proxy_id].pose = self.hands[hand_id]

        finished: List[str] = []
        for proxy_id in sorted(self.plans):
            proxy = self.proxies[proxy_id]
            if proxy.carried:
                continue
            plan = self.plans[proxy_id]
            pose, done, used_ms = execute_tick(proxy, plan, float(self.tick_ms))
            step = distance(proxy.pose, pose)
            turn = abs(wrap_angle(pose.heading - proxy.pose.heading))
            limit = proxy.max_linear_speed * self.tick_ms / 1000.0
            turn_limit = proxy.max_angular_speed * self.tick_ms / 1000.0
            ratio = step / limit if limit > 0 else 0.0
            if ratio > self.speed_audit.get(proxy_id, 0.0):
                self.speed_audit[proxy_id] = ratio
            turn_ratio = turn / turn_limit if turn_limit > 0 else 0.0
            if turn_ratio > self.turn_audit.get(proxy_id, 0.0):
                self.turn_audit[proxy_id] = turn_ratio
            if step > limit + SPEED_TOLERANCE:
                raise SpeedLawViolation(
                    f"{proxy_id} moved {step:.6f} m in one tick (limit {limit:.6f})"
                )
            if turn > turn_limit + SPEED_TOLERANCE:
                raise SpeedLawViolation(
                    f"{proxy_id} turned {turn:.6f} rad in one tick (limit {turn_limit:.6f})"
                )
            proxy.pose = pose
            if done:
                self.arrivals[proxy_id] = t0 + used_ms
                finished.append(proxy_id)
        for proxy_id in finished:
            self.clear_plan(proxy_id)

        self._audit_clearance()
        self.time_ms = t1
        snap = self.snapshot()
        self.digest.update(snap.as_dict())
        return snap

    def run_ticks(self, n: int) -> WorldState:
        for _ in range(n):
            snap = self.advance_tick()
        return snap

    def _audit_clearance(self) -> None:
        # Sites are congruent coordinate frames; only proxies sharing a site
        # can physically collide.
        ids = sorted(self.proxies)
        for i, a in enumerate(ids):
            pa = self.proxies[a]
            for b in ids[i + 1 :]:
                pb = self.proxies[b]
                if pa.site != pb.site:
                    continue
                gap = distance(pa.pose, pb.pose) - (
                    pa.footprint_radius + pb.footprint_radius
                )
                if self.min_clearance is None or gap < self.min_clearance:
                    self.min_clearance = gap

    # -- observation --------------------------------------------------------

    def snapshot(self) -> WorldState:
        return WorldState(
            time_ms=self.time_ms,
            objects={oid: o.as_dict() for oid, o in sorted(self.objects.items())},
            proxies={pid: p.as_dict() for pid, p in sorted(self.proxies.items())},
            hands={hid: h.as_dict() for hid, h in sorted(self.hands.items())},
        )
