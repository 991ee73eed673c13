"""Differential-drive motion: turn-then-drive plans, prioritized collision
avoidance, and deadline admission.

The motion model is turn-in-place followed by straight segments; a proxy
may drive in reverse when that needs the smaller turn, which bounds every
in-place turn by pi/2 and keeps arrival estimates tight. Estimates are
exact for the model (execution replays the same arithmetic), so an
admitted deadline is always met.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from proxysim.core import Pose2D, RobotProxy, Workspace, distance
from proxysim.kernel import drive_step, planar_distance, turn_budget, wrap_angle

# Planner tuning. Detour waypoints stand off obstacles by the required
# clearance times this factor; the grid fallback uses GRID_STEP cells.
DETOUR_MARGIN = 1.25
GRID_STEP = 0.05
GOAL_EPS = 1e-9


class DeadlineInfeasible(Exception):
    """No admissible plan arrives by the requested deadline."""

    def __init__(self, deficit_ms: float, estimated_arrival: float):
        super().__init__(f"deadline missed by {deficit_ms:.1f} ms")
        self.deficit_ms = deficit_ms
        self.estimated_arrival = estimated_arrival


class RouteBlocked(Exception):
    """No collision-free route to the goal was found."""


@dataclass
class MotionPlan:
    """A committed path for one proxy.

    ``waypoints`` excludes the start pose; the last entry is the goal.
    ``estimated_arrival`` is in float ms for sub-tick precision.
    """

    proxy_id: str
    waypoints: list
    start_time: int
    estimated_arrival: float
    turn_time_s: float
    path_length: float
    deadline: Optional[float] = None
    allow_reverse: bool = True
    cursor: int = 0

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.waypoints)

    @property
    def goal(self) -> Optional[Pose2D]:
        return self.waypoints[-1] if self.waypoints else None

    def remaining_polyline(self, current: Pose2D) -> list:
        return [current] + list(self.waypoints[self.cursor :])

    def as_dict(self) -> dict:
        return {
            "proxy_id": self.proxy_id,
            "waypoints": [w.as_dict() for w in self.waypoints],
            "cursor": self.cursor,
            "start_time": self.start_time,
            "estimated_arrival": self.estimated_arrival,
            "deadline": self.deadline,
        }


def _point_segment_distance(px, py, ax, ay, bx, by) -> float:
    vx, vy = bx - ax, by - ay
    wx, wy = px - ax, py - ay
    seg_len2 = vx * vx + vy * vy
    if seg_len2 == 0.0:
        return planar_distance(px, py, ax, ay)
    t = (wx * vx + wy * vy) / seg_len2
    t = min(1.0, max(0.0, t))
    return planar_distance(px, py, ax + t * vx, ay + t * vy)


def _segment_segment_distance(a: Pose2D, b: Pose2D, c: Pose2D, d: Pose2D) -> float:
    def orient(p, q, r):
        return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x)

    d1, d2 = orient(a, b, c), orient(a, b, d)
    d3, d4 = orient(c, d, a), orient(c, d, b)
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0) and (
        (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0
    ):
        return 0.0
    return min(
        _point_segment_distance(c.x, c.y, a.x, a.y, b.x, b.y),
        _point_segment_distance(d.x, d.y, a.x, a.y, b.x, b.y),
        _point_segment_distance(a.x, a.y, c.x, c.y, d.x, d.y),
        _point_segment_distance(b.x, b.y, c.x, c.y, d.x, d.y),
    )


def _obstacle_chains(
    proxy: RobotProxy,
    others: Iterable[RobotProxy],
    other_plans: Optional[Mapping[str, MotionPlan]],
) -> list:
    """(clearance, polyline) per other proxy: its pose plus any remaining
    committed path."""
    chains = []
    for other in others:
        if other.id == proxy.id:
            continue
        clearance = proxy.footprint_radius + other.footprint_radius
        poly = [other.pose]
        if other_plans:
            plan = other_plans.get(other.id)
            if plan is not None and not plan.done:
                poly = plan.remaining_polyline(other.pose)
        chains.append((clearance, poly))
    return chains


def _polyline_clear(points: Sequence[Pose2D], chains: list) -> bool:
    for i in range(len(points) - 1):
        a, b = points[i], points[i + 1]
        for clearance, poly in chains:
            if len(poly) == 1:
                d = _point_segment_distance(poly[0].x, poly[0].y, a.x, a.y, b.x, b.y)
                if d < clearance:
                    return False
                continue
            for j in range(len(poly) - 1):
                if _segment_segment_distance(a, b, poly[j], poly[j + 1]) < clearance:
                    return False
    return True


def _point_clear(p: Pose2D, chains: list, margin: float) -> bool:
    for clearance, poly in chains:
        if len(poly) == 1:
            if distance(p, poly[0]) < clearance + margin:
                return False
            continue
        for j in range(len(poly) - 1):
            a, b = poly[j], poly[j + 1]
            if _point_segment_distance(p.x, p.y, a.x, a.y, b.x, b.y) < clearance + margin:
                return False
    return True


def approachable_goal(
    proxy: RobotProxy,
    goal: Pose2D,
    others: Iterable[RobotProxy] = (),
    *,
    other_plans: Optional[Mapping[str, MotionPlan]] = None,
    ray: Optional[tuple] = None,
    workspace: Optional[Workspace] = None,
    margin: float = 0.01,
) -> Pose2D:
    """Substitute goal when ``goal`` sits inside another proxy's clearance
    (e.g. a tracked object passing over a parked robot).

    With ``ray`` — the direction the goal itself is travelling — the goal is
    pushed forward along the ray to the first clear point past the obstacle,
    so the chase detours around it at full speed instead of stalling at the
    contact edge. Without a usable ray it backs off along the approach line
    to the last clear point. Either way the chase continues instead of
    failing as unroutable."""
    chains = _obstacle_chains(proxy, others, other_plans)
    if _point_clear(goal, chains, margin):
        return goal
    if ray is not None and workspace is not None:
        norm = math.hypot(ray[0], ray[1])
        if norm > GOAL_EPS:
            ux, uy = ray[0] / norm, ray[1] / norm
            reach = math.hypot(workspace.width, workspace.depth)
            steps = max(1, int(reach / (GRID_STEP / 2.0)))
            for k in range(1, steps + 1):
                d = k * (GRID_STEP / 2.0)
                p = Pose2D(goal.x + ux * d, goal.y + uy * d, goal.heading)
                if not workspace.contains(p, margin=proxy.footprint_radius):
                    break
                if _point_clear(p, chains, margin):
                    return p
    total = distance(proxy.pose, goal)
    if total <= GOAL_EPS:
        return proxy.pose
    steps = max(1, int(total / (GRID_STEP / 2.0)) + 1)
    for k in range(1, steps + 1):
        t = 1.0 - k / steps
        p = Pose2D(
            proxy.pose.x + (goal.x - proxy.pose.x) * t,
            proxy.pose.y + (goal.y - proxy.pose.y) * t,
            goal.heading,
        )
        if _point_clear(p, chains, margin):
            return p
    return proxy.pose


def plan_timings(
    start: Pose2D,
    waypoints: Sequence[Pose2D],
    v: float,
    w: float,
    allow_reverse: bool,
) -> tuple:
    """(turn_time_s, travel_time_s, path_length) replaying the executor's
    forward/reverse choices, so the estimate equals actual execution."""
    turn_s = 0.0
    length = 0.0
    heading = start.heading
    prev = start
    for wp in waypoints:
        seg = distance(prev, wp)
        if seg <= GOAL_EPS:
            prev = wp
            continue
        seg_dir = prev.direction_to(wp)
        turn = turn_budget(heading, seg_dir, allow_reverse)
        turn_s += turn / w
        length += seg
        facing = seg_dir
        if allow_reverse and abs(wrap_angle(seg_dir - heading)) > math.pi / 2:
            facing = wrap_angle(seg_dir + math.pi)
        heading = facing
        prev = wp
    return turn_s, length / v, length


def _grid_route(
    start: Pose2D, goal: Pose2D, chains: list, workspace: Workspace, margin: float
) -> Optional[list]:
    """Coarse A* fallback over a GRID_STEP lattice; returns waypoints or None."""
    nx = max(2, int(workspace.width / GRID_STEP) + 1)
    ny = max(2, int(workspace.depth / GRID_STEP) + 1)

    def cell_pose(c):
        return Pose2D(
            min(max(c[0] * GRID_STEP, margin), workspace.width - margin),
            min(max(c[1] * GRID_STEP, margin), workspace.depth - margin),
        )

    def blocked(c):
        p = cell_pose(c)
        for clearance, poly in chains:
            if len(poly) == 1:
                if distance(p, poly[0]) < clearance:
                    return True
            else:
                for j in range(len(poly) - 1):
                    if (
                        _point_segment_distance(
                            p.x, p.y, poly[j].x, poly[j].y, poly[j + 1].x, poly[j + 1].y
                        )
                        < clearance
                    ):
                        return True
        return False

    start_c = (round(start.x / GRID_STEP), round(start.y / GRID_STEP))
    goal_c = (round(goal.x / GRID_STEP), round(goal.y / GRID_STEP))
    goal_p = cell_pose(goal_c)

    frontier = [(0.0, 0, start_c)]
    came: dict = {start_c: None}
    cost = {start_c: 0.0}
    tie = 0
    while frontier:
        _, _, cur = heapq.heappop(frontier)
        if cur == goal_c:
            break
        cx, cy = cur
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                nxt = (cx + dx, cy + dy)
                if not (0 <= nxt[0] < nx and 0 <= nxt[1] < ny):
                    continue
                if blocked(nxt):
                    continue
                step = GRID_STEP * math.sqrt(dx * dx + dy * dy)
                new_cost = cost[cur] + step
                if nxt not in cost or new_cost < cost[nxt] - 1e-12:
                    cost[nxt] = new_cost
                    came[nxt] = cur
                    p = cell_pose(nxt)
                    h = distance(p, goal_p)
                    tie += 1
                    heapq.heappush(frontier, (new_cost + h, tie, nxt))
    if goal_c not in came:
        return None
    cells = []
    c = goal_c
    while c is not None:
        cells.append(c)
        c = came[c]
    cells.reverse()
    points = [start] + [cell_pose(c) for c in cells[1:]] + [goal]
    # string pulling: drop intermediate points while the shortcut stays clear
    simplified = [points[0]]
    i = 0
    while i < len(points) - 1:
        j = len(points) - 1
        while j > i + 1 and not _polyline_clear([points[i], points[j]], chains):
            j -= 1
        simplified.append(points[j])
        i = j
    return simplified[1:]


def plan_path(
    proxy: RobotProxy,
    goal: Pose2D,
    others: Iterable[RobotProxy] = (),
    deadline: Optional[float] = None,
    *,
    workspace: Workspace,
    now_ms: float = 0,
    other_plans: Optional[Mapping[str, MotionPlan]] = None,
    allow_reverse: bool = True,
) -> MotionPlan:
    """Plan a route to ``goal`` keeping footprint clearance from every other
    proxy's pose and committed path.

    Raises DeadlineInfeasible when the estimated arrival misses the deadline
    and RouteBlocked when no clear route exists. An empty plan (goal equals
    the current pose) arrives immediately.
    """
    margin = proxy.footprint_radius
    if not workspace.contains(goal):
        raise ValueError(f"goal {goal} outside workspace")

    if distance(proxy.pose, goal) <= GOAL_EPS:
        return MotionPlan(
            proxy_id=proxy.id,
            waypoints=[],
            start_time=int(now_ms),
            estimated_arrival=float(now_ms),
            turn_time_s=0.0,
            path_length=0.0,
            deadline=deadline,
            allow_reverse=allow_reverse,
        )

    chains = _obstacle_chains(proxy, others, other_plans)
    route: Optional[list] = None
    if _polyline_clear([proxy.pose, goal], chains):
        route = [goal]
    else:
        # single-detour tangent heuristic around the nearest offender
        offender = None
        best_d = math.inf
        for clearance, poly in chains:
            for p in poly:
                d = _point_segment_distance(
                    p.x, p.y, proxy.pose.x, proxy.pose.y, goal.x, goal.y
                )
                if d < clearance and d < best_d:
                    best_d = d
                    offender = (clearance, p)
        if offender is not None:
            clearance, center = offender
            seg_dir = proxy.pose.direction_to(goal)
            off = clearance * DETOUR_MARGIN
            candidates = []
            for side in (1.0, -1.0):
                wx = center.x + off * math.cos(seg_dir + side * math.pi / 2)
                wy = center.y + off * math.sin(seg_dir + side * math.pi / 2)
                wp = Pose2D(
                    min(max(wx, margin), workspace.width - margin),
                    min(max(wy, margin), workspace.depth - margin),
                )
                if _polyline_clear([proxy.pose, wp, goal], chains):
                    candidates.append(
                        (distance(proxy.pose, wp) + distance(wp, goal), side, wp)
                    )
            if candidates:
                candidates.sort(key=lambda c: (c[0], c[1]))
                route = [candidates[0][2], goal]
        if route is None:
            route = _grid_route(proxy.pose, goal, chains, workspace, margin)
        if route is None:
            raise RouteBlocked(f"no clear route for {proxy.id}")

    turn_s, travel_s, length = plan_timings(
        proxy.pose, route, proxy.max_linear_speed, proxy.max_angular_speed, allow_reverse
    )
    arrival = now_ms + 1000.0 * (turn_s + travel_s)
    if deadline is not None and arrival > deadline:
        raise DeadlineInfeasible(deficit_ms=arrival - deadline, estimated_arrival=arrival)
    return MotionPlan(
        proxy_id=proxy.id,
        waypoints=route,
        start_time=int(now_ms),
        estimated_arrival=arrival,
        turn_time_s=turn_s,
        path_length=length,
        deadline=deadline,
        allow_reverse=allow_reverse,
    )


def execute_tick(proxy: RobotProxy, plan: MotionPlan, dt_ms: float) -> tuple:
    """Advance the proxy along its plan for one tick.

    Returns ``(pose, done, used_ms)`` where ``used_ms`` is the time actually
    spent moving (sub-tick precision; the remainder of the tick is idle once
    the plan completes). Never exceeds the proxy's speed limits.
    """
    t = dt_ms / 1000.0
    x, y, h = proxy.pose.x, proxy.pose.y, proxy.pose.heading
    while t > 0.0 and plan.cursor < len(plan.waypoints):
        wp = plan.waypoints[plan.cursor]
        x, y, h, t, reached = drive_step(
            x,
            y,
            h,
            wp.x,
            wp.y,
            proxy.max_linear_speed,
            proxy.max_angular_speed,
            t,
            plan.allow_reverse,
        )
        if reached:
            plan.cursor += 1
        else:
            break
    used_ms = dt_ms - t * 1000.0
    return Pose2D(x, y, h), plan.done, used_ms
