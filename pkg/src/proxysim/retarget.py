"""Distributed-illusion retargeting: set-down prediction, artificial-latency
delay buffering, and deadline-driven catch-up planning.

The remote visual stream is delayed by a fixed artificial latency while the
remote proxy repositions immediately, so the proxy is already in place when
the set-down becomes visible. The local user's own view is never delayed.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from proxysim.core import (
    DEFAULT_ARTIFICIAL_LATENCY_MS,
    DEFAULT_HAND_SPEED,
    Pose2D,
    RobotProxy,
    TrackedFrame,
    VirtualObject,
    Workspace,
    distance,
)
from proxysim.kernel import planar_distance
from proxysim.motion import DeadlineInfeasible, MotionPlan, plan_path

# A hand slower than this is treated as stationary for prediction purposes.
SETDOWN_SPEED_THRESHOLD = 0.05  # m/s
REPLAN_INTERVAL_MS = 100
VELOCITY_WINDOW_MS = 150


def predict_setdown(
    held_object: VirtualObject, hand: TrackedFrame, anchors: list
) -> Pose2D:
    """Snap prediction: the anchor nearest the held object's current
    position, or the current position itself when no anchors exist."""
    if held_object.held_by is None:
        raise ValueError(f"object {held_object.id} is not held")
    if not anchors:
        return held_object.pose
    return min(
        anchors,
        key=lambda a: (planar_distance(a.x, a.y, held_object.pose.x, held_object.pose.y)),
    )


def min_anchor_spacing(anchors: Iterable[Pose2D]) -> float:
    """Smallest pairwise anchor distance; inf for fewer than two anchors."""
    pts = list(anchors)
    best = math.inf
    for i, a in enumerate(pts):
        for b in pts[i + 1 :]:
            d = distance(a, b)
            if d < best:
                best = d
    return best


def predict_setdown_moving(
    pose: Pose2D,
    velocity: Tuple[float, float],
    workspace: Workspace,
    speed_threshold: float = SETDOWN_SPEED_THRESHOLD,
) -> Tuple[Optional[str], Pose2D]:
    """Velocity-aware prediction used while a carry is in flight.

    A moving hand is assumed to continue along its velocity ray; the
    predicted set-down is the farthest anchor ahead within a corridor half
    the minimum anchor spacing wide. A stationary hand (or an empty
    corridor) falls back to the snap rule.
    """
    anchors = workspace.anchors
    if not anchors:
        return None, pose
    vx, vy = velocity
    speed = math.sqrt(vx * vx + vy * vy)
    if speed >= speed_threshold:
        ux, uy = vx / speed, vy / speed
        half_corridor = 0.5 * min_anchor_spacing(workspace.anchor_poses())
        best = None
        for name, anchor in anchors:
            dx, dy = anchor.x - pose.x, anchor.y - pose.y
            ahead = dx * ux + dy * uy
            lateral = abs(dx * uy - dy * ux)
            if ahead > 0.0 and lateral <= half_corridor:
                key = (-ahead, name)
                if best is None or key < best[0]:
                    best = (key, name, anchor)
        if best is not None:
            return best[1], best[2]
    name, anchor = workspace.nearest_anchor(pose)
    return name, anchor


class DelayBuffer:
    """FIFO of timestamped frames released an artificial latency after
    receipt, preserving inter-frame spacing exactly."""

    def __init__(self, artificial_latency: int = DEFAULT_ARTIFICIAL_LATENCY_MS):
        if artificial_latency < 0:
            raise ValueError("artificial latency must be non-negative")
        self.artificial_latency = artificial_latency
        self._queue: deque = deque()  # (receipt_ms, frame)

    def __len__(self) -> int:
        return len(self._queue)

    def push(self, frame: TrackedFrame, receipt_ms: Optional[int] = None) -> None:
        receipt = frame.timestamp if receipt_ms is None else receipt_ms
        if self._queue and receipt < self._queue[-1][0]:
            raise ValueError("receipt times must be non-decreasing")
        self._queue.append((receipt, frame))

    def due(self, now_ms: int) -> List[TrackedFrame]:
        """Frames whose receipt + latency has elapsed, in receipt order."""
        out = []
        while self._queue and self._queue[0][0] + self.artificial_latency <= now_ms:
            out.append(self._queue.popleft()[1])
        return out

    def peek_delay(self, now_ms: int) -> Optional[int]:
        """ms until the next frame is due, or None when empty."""
        if not self._queue:
            return None
        return max(0, self._queue[0][0] + self.artificial_latency - now_ms)


def delayed_view(buffer: DelayBuffer, now: int) -> List[TrackedFrame]:
    """Release every frame due at ``now`` (receipt + latency ≤ now)."""
    return buffer.due(now)


class VelocityEstimator:
    """Mean velocity per subject over a sliding window of live frames."""

    def __init__(self, window_ms: int = VELOCITY_WINDOW_MS):
        self.window_ms = window_ms
        self._hist: Dict[str, deque] = {}

    def update(self, subject_id: str, pose: Pose2D, timestamp: int) -> None:
        hist = self._hist.setdefault(subject_id, deque())
        hist.append((timestamp, pose))
        while hist and hist[0][0] < timestamp - self.window_ms:
            hist.popleft()

    def reset(self, subject_id: str) -> None:
        """Forget history, e.g. after a teleport that would fake a velocity."""
        self._hist.pop(subject_id, None)

    def velocity(self, subject_id: str) -> Tuple[float, float]:
        hist = self._hist.get(subject_id)
        if not hist or len(hist) < 2:
            return 0.0, 0.0
        (t0, p0), (t1, p1) = hist[0], hist[-1]
        dt = (t1 - t0) / 1000.0
        if dt <= 0.0:
            return 0.0, 0.0
        return (p1.x - p0.x) / dt, (p1.y - p0.y) / dt


@dataclass
class RetargetTask:
    """One carry: a remote proxy invisibly chasing a predicted set-down."""

    proxy_id: str
    object_id: str
    predicted_goal: Pose2D
    deadline: float  # ms
    prediction_source: str = "snap-anchor"  # snap-anchor | release-event
    revision: int = 0
    predicted_anchor: Optional[str] = None
    grasp_time: int = 0
    depart_time: Optional[float] = None
    release_time: Optional[int] = None
    display_time: Optional[float] = None
    estimated_arrival: Optional[float] = None
    last_plan_time: Optional[float] = None
    has_real_plan: bool = False
    pending_replan: bool = False
    best_effort: bool = False
    deficit_ms: float = 0.0
    state: str = "active"  # active | released | settled

    def as_dict(self) -> dict:
        return {
            "proxy_id": self.proxy_id,
            "object_id": self.object_id,
            "predicted_goal": self.predicted_goal.as_dict(),
            "predicted_anchor": self.predicted_anchor,
            "deadline": self.deadline,
            "prediction_source": self.prediction_source,
            "revision": self.revision,
            "state": self.state,
        }


def schedule_remote_catch_up(
    task: RetargetTask,
    proxy: RobotProxy,
    others: Iterable[RobotProxy],
    *,
    workspace: Workspace,
    now_ms: float,
    other_plans=None,
) -> MotionPlan:
    """Plan the proxy's catch-up motion toward the task goal under its
    deadline. DeadlineInfeasible propagates to the caller, which records the
    deficit as an illusion-break risk rather than crashing."""
    plan = plan_path(
        proxy,
        task.predicted_goal,
        others,
        deadline=task.deadline,
        workspace=workspace,
        now_ms=now_ms,
        other_plans=other_plans,
    )
    return plan


class RetargetScheduler:
    """Owns the active RetargetTasks for one latency domain.

    ``planner(task, now_ms)`` commits a plan for the task's proxy and
    returns it; it raises DeadlineInfeasible when the deadline cannot be
    met, after which the scheduler retries without a deadline (best effort)
    and flags the task.
    """

    def __init__(
        self,
        workspace: Workspace,
        planner: Callable[[RetargetTask, float], MotionPlan],
        *,
        latency_ms: int = DEFAULT_ARTIFICIAL_LATENCY_MS,
        hand_speed: float = DEFAULT_HAND_SPEED,
        replan_interval_ms: int = REPLAN_INTERVAL_MS,
    ):
        self.workspace = workspace
        self.planner = planner
        self.latency_ms = latency_ms
        self.hand_speed = hand_speed
        self.replan_interval_ms = replan_interval_ms
        self.tasks: Dict[str, RetargetTask] = {}

    # -- lifecycle ----------------------------------------------------------

    def begin_carry(
        self, object_id: str, proxy_id: str, object_pose: Pose2D, now_ms: int
    ) -> RetargetTask:
        """Open a task at grasp time with the stationary snap prediction."""
        anchor = self.workspace.nearest_anchor(object_pose)
        name, goal = anchor if anchor is not None else (None, object_pose)
        task = RetargetTask(
            proxy_id=proxy_id,
            object_id=object_id,
            predicted_goal=goal,
            predicted_anchor=name,
            deadline=self._rolling_deadline(object_pose, goal, now_ms),
            grasp_time=now_ms,
        )
        self.tasks[object_id] = task
        self._plan(task, now_ms)
        return task

    def observe(
        self,
        object_id: str,
        object_pose: Pose2D,
        velocity: Tuple[float, float],
        now_ms: int,
    ) -> None:
        """Per-tick update while the object is carried: refresh the
        prediction and replan when it changes.

        The first path-producing replan is never rate-limited (it sets
        departure time and the slack budget); later revisions coalesce to
        one replan per interval.
        """
        task = self.tasks.get(object_id)
        if task is None or task.state != "active":
            return
        name, goal = predict_setdown_moving(object_pose, velocity, self.workspace)
        changed = distance(goal, task.predicted_goal) > 1e-12
        if changed:
            task.revision += 1
            task.predicted_goal = goal
            task.predicted_anchor = name
            task.pending_replan = True
        task.deadline = self._rolling_deadline(object_pose, task.predicted_goal, now_ms)
        if task.pending_replan and self._may_replan(task, now_ms):
            self._plan(task, now_ms)

    def release(self, object_id: str, release_pose: Pose2D, now_ms: int) -> RetargetTask:
        """Finalize the goal from the actual release: snap to the nearest
        anchor, fix the display deadline, and replan immediately if the
        prediction was off (the release event bypasses the rate limit)."""
        task = self.tasks[object_id]
        anchor = self.workspace.nearest_anchor(release_pose)
        name, goal = anchor if anchor is not None else (None, release_pose)
        task.release_time = now_ms
        task.display_time = float(now_ms + self.latency_ms)
        task.deadline = task.display_time
        task.prediction_source = "release-event"
        task.state = "released"
        if distance(goal, task.predicted_goal) > 1e-12:
            task.revision += 1
            task.predicted_goal = goal
            task.predicted_anchor = name
            self._plan(task, now_ms)
        return task

    def settle(self, object_id: str) -> Optional[RetargetTask]:
        task = self.tasks.pop(object_id, None)
        if task is not None:
            task.state = "settled"
        return task

    # -- internals ----------------------------------------------------------

    def _rolling_deadline(self, hand_pose: Pose2D, goal: Pose2D, now_ms: int) -> float:
        travel_ms = 1000.0 * distance(hand_pose, goal) / self.hand_speed
        return now_ms + self.latency_ms + travel_ms

    def _may_replan(self, task: RetargetTask, now_ms: int) -> bool:
        if not task.has_real_plan:
            return True
        if task.last_plan_time is None:
            return True
        return now_ms - task.last_plan_time >= self.replan_interval_ms

    def _plan(self, task: RetargetTask, now_ms: int) -> None:
        task.pending_replan = False
        try:
            plan = self.planner(task, float(now_ms))
        except DeadlineInfeasible as exc:
            task.best_effort = True
            task.deficit_ms = exc.deficit_ms
            saved = task.deadline
            task.deadline = math.inf
            try:
                plan = self.planner(task, float(now_ms))
            finally:
                task.deadline = saved
        task.estimated_arrival = plan.estimated_arrival
        task.last_plan_time = float(now_ms)
        if plan.waypoints:
            task.has_real_plan = True
            if task.depart_time is None:
                task.depart_time = float(now_ms)
