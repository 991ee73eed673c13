"""Scenario runner: replays a validated script against the simulation on a
virtual clock, wiring the relay, mapping engine, retarget scheduler, and
gesture streams together.

Everything advances in 10 ms ticks from a single writer, so a run is a
pure function of its script: identical scripts give identical digests,
metrics, and relay traffic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from proxysim.core import (
    ARRIVAL_EPS_M,
    TICK_MS,
    Pose2D,
    RobotProxy,
    TrackedFrame,
    VirtualObject,
    distance,
)
from proxysim.gesture import GestureStream, WristSample, resolve_target
from proxysim.mapping import MappingEngine, UnserviceableDispatch
from proxysim.metrics import MoveRecord, RunMetrics, percentile, summary_row
from proxysim.motion import MotionPlan, RouteBlocked, approachable_goal, plan_path
from proxysim.relay import ClientRegistration, InProcRelay
from proxysim.retarget import (
    RetargetScheduler,
    RetargetTask,
    VelocityEstimator,
    schedule_remote_catch_up,
)
from proxysim.scripts import ScenarioScript
from proxysim.world import World

RUN_HARD_CAP_MS = 180_000
SETTLE_GRACE_MS = 2_000


@dataclass
class _HandMotion:
    hand_id: str
    site: str
    start: Pose2D
    goal: Pose2D
    speed: float
    t0: int
    teleport: bool = False
    on_arrival: Optional[str] = None  # object id to release when the hand lands

    def pose_at(self, t: int) -> Tuple[Pose2D, bool]:
        if self.teleport:
            return self.goal, True
        d = distance(self.start, self.goal)
        if d == 0.0:
            return self.goal, True
        travelled = self.speed * (t - self.t0) / 1000.0
        if travelled >= d:
            return self.goal, True
        f = travelled / d
        return (
            Pose2D(
                self.start.x + f * (self.goal.x - self.start.x),
                self.start.y + f * (self.goal.y - self.start.y),
                self.goal.heading,
            ),
            False,
        )


@dataclass
class _GestureMotion:
    hand_id: str
    site: str
    start: Pose2D
    direction: Tuple[float, float]
    speed: float
    t0: int
    duration_ms: int
    event: dict
    fired: bool = False

    def sample_at(self, t: int) -> Optional[Pose2D]:
        dt = t - self.t0
        if dt < 0 or dt > self.duration_ms:
            return None
        s = self.speed * dt / 1000.0
        return Pose2D(
            self.start.x + s * self.direction[0],
            self.start.y + s * self.direction[1],
            self.start.heading,
        )


@dataclass
class _Pursuit:
    proxy_id: str
    hand_id: str
    project: dict
    until: int
    started: int = 0
    max_error: float = 0.0
    grace_ms: int = 300


@dataclass
class RunResult:
    metrics: RunMetrics
    final_state: dict
    states: List[dict] = field(default_factory=list)


class ScenarioRunner:
    def __init__(
        self,
        script: ScenarioScript,
        *,
        collect_states: bool = False,
        state_stride: int = 1,
        on_snapshot: Optional[Callable[[dict], None]] = None,
    ):
        script.require_valid()
        self.script = script
        self.workspace = script.build_workspace()
        self.latency = script.artificial_latency_ms
        self.hand_speed = script.hand_speed
        self.collect_states = collect_states
        self.state_stride = max(1, state_stride)
        self.on_snapshot = on_snapshot

        self.world = World(self.workspace)
        self.engine = MappingEngine()
        self.relay = InProcRelay(jitter_seed=script.seed)
        self.namespace = script.name
        self.metrics = RunMetrics(scenario=script.name)

        self.object_site: Dict[str, str] = {}
        self.hand_site: Dict[str, str] = {}
        self._setup_entities()

        self.site_clients = {
            site: self.relay.connect(
                ClientRegistration(f"site-{site}", (self.namespace,), "both", site)
            )
            for site in script.sites
        }
        relay_cfg = script.metadata.get("relay_latency")
        if relay_cfg:
            self.relay.inject_latency(
                self.namespace,
                int(relay_cfg.get("delay", 0)),
                int(relay_cfg.get("jitter", 0)),
            )

        self.scheduler = RetargetScheduler(
            self.workspace,
            self._planner,
            latency_ms=self.latency,
            hand_speed=self.hand_speed,
        )
        self.velocity = VelocityEstimator()

        self.now = 0
        self.events = list(script.events)
        self.event_cursor = 0
        self.hand_motions: Dict[str, _HandMotion] = {}
        self.gesture_motions: Dict[str, _GestureMotion] = {}
        self.gesture_streams: Dict[str, GestureStream] = {}
        self.pursuits: List[_Pursuit] = []
        self._all_pursuits: List[_Pursuit] = []
        self.records_open: List[Tuple[RetargetTask, MoveRecord]] = []
        self.gesture_plans: Dict[str, MoveRecord] = {}  # proxy id -> open record
        self.gesture_expect: Dict[str, Tuple[str, Optional[Pose2D]]] = {}
        self.displays: List[Tuple[float, int, str, dict]] = []  # heap
        self._display_tie = 0
        self.belief: Dict[Tuple[str, str], Pose2D] = {}  # (site, subject) -> pose
        self.move_counter = 0
        self.states: List[dict] = []
        self.metrics_latencies: List[float] = []
        self._last_converge_goal: Dict[str, Pose2D] = {}
        self._last_object_frame: Dict[str, Pose2D] = {}
        self._arrived_hands: List[str] = []
        # frames injected by an interactive session for the upcoming tick;
        # they take precedence over synthesized motion for the same subject
        self.external_frames: List[TrackedFrame] = []
        self._ui_grasp_pose: Dict[str, Pose2D] = {}

    # -- setup ---------------------------------------------------------------

    def _setup_entities(self) -> None:
        for o in self.script.objects:
            self.world.add_object(
                VirtualObject(
                    id=o["id"],
                    pose=Pose2D.from_dict(o["pose"]),
                    visual_kind=o.get("visual_kind", "tile-marker"),
                )
            )
            self.object_site[o["id"]] = o.get("site", self.script.sites[0])
        for p in self.script.proxies:
            overrides = {
                k: p[k]
                for k in ("max_linear_speed", "max_angular_speed", "footprint_radius")
                if k in p
            }
            self.world.add_proxy(
                RobotProxy.from_profile(
                    p["id"], p["site"], p["profile"], Pose2D.from_dict(p["pose"]),
                    **overrides,
                )
            )
        for b in self.script.bindings:
            kind = b["kind"]
            if kind == "one-to-one":
                proxy_id, site = next(iter(b["proxies"].items()))
                self.engine.bind_one_to_one(b["virtual"][0], proxy_id, site)
            elif kind == "one-to-many":
                self.engine.bind_one_to_many(b["virtual"], b["proxies"])
            else:
                self.engine.bind_many_to_one(b["virtual"][0], b["proxies"])

    # -- retarget plumbing ------------------------------------------------------

    def _site_others(self, proxy: RobotProxy) -> List[RobotProxy]:
        return [
            p
            for p in self.world.proxies.values()
            if p.id != proxy.id and p.site == proxy.site
        ]

    def _planner(self, task: RetargetTask, now_ms: float) -> MotionPlan:
        proxy = self.world.proxies[task.proxy_id]
        others = self._site_others(proxy)
        obj = self.world.objects.get(task.object_id)
        ray = (
            self.velocity.velocity(obj.held_by)
            if obj is not None and obj.held_by is not None
            else None
        )
        goal = approachable_goal(
            proxy, task.predicted_goal, others,
            other_plans=self.world.plans, ray=ray, workspace=self.workspace,
        )
        try:
            if goal is task.predicted_goal:
                plan = schedule_remote_catch_up(
                    task,
                    proxy,
                    others,
                    workspace=self.workspace,
                    now_ms=now_ms,
                    other_plans=self.world.plans,
                )
            else:
                # partial approach while the true goal is occluded; no
                # admission check against a goal we cannot reach yet
                plan = plan_path(
                    proxy, goal, others, workspace=self.workspace, now_ms=now_ms,
                    other_plans=self.world.plans,
                )
        except RouteBlocked:
            prior = self.world.plans.get(task.proxy_id)
            if prior is not None:
                return prior
            return MotionPlan(
                proxy_id=task.proxy_id,
                waypoints=[],
                start_time=now_ms,
                estimated_arrival=now_ms,
                turn_time_s=0.0,
                path_length=0.0,
            )
        if plan.waypoints:
            self.world.set_plan(plan)
            record = self._record_for(task)
            if record is not None and len(plan.waypoints) > record.waypoints:
                record.waypoints = len(plan.waypoints)
        return plan

    def _record_for(self, task: RetargetTask) -> Optional[MoveRecord]:
        for t, record in self.records_open:
            if t is task:
                return record
        return None

    def _proxy_for_object(self, object_id: str, site: str) -> str:
        binding = self.engine.binding_of_virtual(object_id)
        if binding is None:
            raise ValueError(f"object {object_id!r} has no binding")
        if binding.kind == "one-to-one":
            return next(iter(binding.proxy_sites))
        if binding.kind == "one-to-many":
            if binding.target.get(site) != object_id or site not in binding.active:
                obj = self.world.objects[object_id]
                prev = binding.active.get(site)
                chosen = self.engine.dispatch_nearest(
                    binding, obj.pose, site, self.world.proxies, virtual_id=object_id
                )
                if prev is not None and prev != chosen:
                    self.world.clear_plan(prev)
                self.metrics.reassignments += 1
            return binding.active[site]
        raise ValueError("carry of a many-to-one object uses grasp-proxy")

    # -- event processing ---------------------------------------------------------

    def _process_events(self) -> None:
        while (
            self.event_cursor < len(self.events)
            and self.events[self.event_cursor]["at"] <= self.now
        ):
            event = self.events[self.event_cursor]
            self.event_cursor += 1
            handler = getattr(self, "_ev_" + event["type"].replace("-", "_"))
            handler(event)

    def _resolve_to(self, to) -> Tuple[Pose2D, Optional[str]]:
        if isinstance(to, str):
            return self.workspace.anchor(to), to
        return Pose2D(to["x"], to["y"], to.get("heading", 0.0)), None

    def _ev_carry(self, e: dict) -> None:
        obj = self.world.objects[e["object"]]
        goal, anchor_name = self._resolve_to(e["to"])
        hand = e["hand"]
        site = e["site"]
        self.hand_site[hand] = site
        speed = float(e.get("speed", self.hand_speed))
        proxy_id = self._proxy_for_object(obj.id, self.object_site[obj.id])
        obj.held_by = hand
        grasp_pose = obj.pose
        # grasp contact: the hand is on the object now; seed the velocity
        # estimate from here so the first moved frame already yields a ray
        self.velocity.reset(hand)
        self.velocity.update(hand, grasp_pose, self.now)
        self.hand_motions[hand] = _HandMotion(
            hand, site, grasp_pose, goal.with_heading(grasp_pose.heading), speed,
            self.now, on_arrival=obj.id,
        )
        task = self.scheduler.begin_carry(obj.id, proxy_id, grasp_pose, self.now)
        self.move_counter += 1
        near = self.workspace.nearest_anchor(grasp_pose)
        record = MoveRecord(
            move=self.move_counter,
            object_id=obj.id,
            proxy_id=proxy_id,
            kind="carry",
            grasp_ms=self.now,
            distance_m=distance(grasp_pose, goal),
            from_anchor=near[0] if near else None,
            to_anchor=anchor_name,
        )
        self.records_open.append((task, record))
        self.metrics.moves.append(record)
        self._publish_event(
            site,
            {
                "event": "grasp",
                "object": obj.id,
                "pose": grasp_pose.as_dict(),
                "move": record.move,
            },
        )
        self._publish_retarget(proxy_id, task)

    def _finish_carry(self, object_id: str, release_pose: Pose2D) -> None:
        obj = self.world.objects[object_id]
        hand = obj.held_by
        obj.held_by = None
        if object_id not in self.scheduler.tasks:
            return
        task = self.scheduler.release(object_id, release_pose, self.now)
        record = self._record_for(task)
        site = self.hand_site.get(hand, self.object_site[object_id])
        if record is not None:
            record.release_ms = self.now
            record.display_ms = task.display_time
            record.revisions = task.revision
            record.best_effort = task.best_effort
        payload = {
            "event": "release",
            "object": object_id,
            "pose": release_pose.as_dict(),
            "anchor": task.predicted_anchor,
            "move": record.move if record else None,
        }
        self._publish_event(site, payload)
        self._publish_retarget(task.proxy_id, task)
        if len(self.script.sites) < 2:
            # no remote viewer: the delayed replay is local to the one site
            self._push_display(float(self.now + self.latency), "release", payload)

    # -- interactive (UI) carries ------------------------------------------------

    def begin_ui_carry(self, object_id: str, hand: str, site: str) -> MoveRecord:
        """Grasp driven by a live client; drag frames arrive via
        ``external_frames`` and the release via ``finish_ui_carry``."""
        obj = self.world.objects[object_id]
        proxy_id = self._proxy_for_object(object_id, self.object_site[object_id])
        self.hand_site[hand] = site
        obj.held_by = hand
        grasp_pose = obj.pose
        self._ui_grasp_pose[object_id] = grasp_pose
        self.velocity.reset(hand)
        self.velocity.update(hand, grasp_pose, self.now)
        task = self.scheduler.begin_carry(object_id, proxy_id, grasp_pose, self.now)
        self.move_counter += 1
        near = self.workspace.nearest_anchor(grasp_pose)
        record = MoveRecord(
            move=self.move_counter,
            object_id=object_id,
            proxy_id=proxy_id,
            kind="carry",
            grasp_ms=self.now,
            from_anchor=near[0] if near else None,
        )
        self.records_open.append((task, record))
        self.metrics.moves.append(record)
        self._publish_event(
            site,
            {
                "event": "grasp",
                "object": object_id,
                "pose": grasp_pose.as_dict(),
                "move": record.move,
            },
        )
        self._publish_retarget(proxy_id, task)
        return record

    def finish_ui_carry(self, object_id: str, release_pose: Pose2D) -> None:
        obj = self.world.objects[object_id]
        record = next(
            (
                r
                for t, r in self.records_open
                if r.object_id == object_id and r.release_ms is None
            ),
            None,
        )
        grasp_pose = self._ui_grasp_pose.pop(object_id, obj.pose)
        if record is not None:
            record.distance_m = distance(grasp_pose, release_pose)
            anchor = self.workspace.nearest_anchor(release_pose)
            record.to_anchor = anchor[0] if anchor else None
        obj.pose = release_pose
        self._finish_carry(object_id, release_pose)

    def set_latency(self, latency_ms: int) -> None:
        """Live latency change; applies to carries begun after the call."""
        self.latency = int(latency_ms)
        self.scheduler.latency_ms = int(latency_ms)

    def _ev_gesture(self, e: dict) -> None:
        hand = e["hand"]
        self.hand_site[hand] = e["site"]
        wrist = Pose2D(e["wrist"]["x"], e["wrist"]["y"], e["wrist"].get("heading", 0.0))
        self.gesture_streams[hand] = GestureStream(hand)
        self.velocity.reset(hand)
        self.gesture_motions[hand] = _GestureMotion(
            hand_id=hand,
            site=e["site"],
            start=wrist,
            direction=(e["motion"]["x"], e["motion"]["y"]),
            speed=float(e["speed"]),
            t0=self.now,
            duration_ms=int(e["duration_ms"]),
            event=e,
        )
        self.metrics.gesture_total += 1

    def _ev_place(self, e: dict) -> None:
        obj = self.world.objects[e["object"]]
        goal, _ = self._resolve_to(e["to"])
        obj.pose = goal
        if e.get("with_proxy"):
            binding = self.engine.binding_of_virtual(obj.id)
            if binding is not None:
                for proxy_id in binding.proxy_sites:
                    proxy = self.world.proxies[proxy_id]
                    self.world.clear_plan(proxy_id)
                    proxy.pose = goal.with_heading(proxy.pose.heading)
                    proxy.state = "engaged"

    def _ev_grasp_proxy(self, e: dict) -> None:
        site, hand, proxy_id, object_id = e["site"], e["hand"], e["proxy"], e["object"]
        self.hand_site[hand] = site
        winner = self.engine.grasp_shared(object_id, site, e["at"])
        if winner == site:
            proxy = self.world.proxies[proxy_id]
            self.world.set_carried(proxy_id, hand)
            self.hand_motions[hand] = _HandMotion(
                hand, site, proxy.pose, proxy.pose, self.hand_speed, self.now,
                teleport=True,
            )
        self._publish_event(
            site,
            {"event": "grasp-proxy", "object": object_id, "granted": winner == site,
             "authority": winner},
        )

    def _ev_release_proxy(self, e: dict) -> None:
        self.engine.release_shared(e["object"], e["site"])
        self.world.set_carried(e["proxy"], None)
        self._publish_event(
            e["site"], {"event": "release-proxy", "object": e["object"]}
        )

    def _ev_hand_move(self, e: dict) -> None:
        hand = e["hand"]
        self.hand_site[hand] = e["site"]
        goal, _ = self._resolve_to(e["to"])
        start = self.world.hands.get(hand, goal)
        teleport = bool(e.get("teleport", False))
        if teleport:
            self.velocity.reset(hand)
        self.hand_motions[hand] = _HandMotion(
            hand, e["site"], start, goal.with_heading(start.heading),
            float(e.get("speed", self.hand_speed)), self.now, teleport=teleport,
        )

    def _ev_park(self, e: dict) -> None:
        proxy = self.world.proxies[e["proxy"]]
        goal, _ = self._resolve_to(e["to"])
        plan = plan_path(
            proxy, goal, self._site_others(proxy), workspace=self.workspace,
            now_ms=self.now, other_plans=self.world.plans,
        )
        if plan.waypoints:
            self.world.set_plan(plan)

    def _ev_pursuit(self, e: dict) -> None:
        pursuit = _Pursuit(
            proxy_id=e["proxy"],
            hand_id=e["hand"],
            project=dict(e["project"]),
            until=int(e["until"]),
            started=self.now,
        )
        self.pursuits.append(pursuit)
        self._all_pursuits.append(pursuit)

    def _ev_check(self, e: dict) -> None:
        self.metrics.checks[e["name"]] = self._evaluate_check(e)

    def _evaluate_check(self, e: dict) -> bool:
        kind = e["kind"]
        if kind == "shared-agreement":
            obj = self.world.objects[e["object"]]
            binding = self.engine.binding_of_virtual(obj.id)
            eps = float(e.get("eps", ARRIVAL_EPS_M))
            return binding is not None and all(
                distance(self.world.proxies[p].pose, obj.pose) <= eps
                for p in binding.proxy_sites
            )
        if kind == "proxies-engaged":
            return all(
                self.world.proxies[p].state == "engaged" for p in e["proxies"]
            )
        if kind == "gap-at-least":
            a, b = (self.world.objects[oid] for oid in e["objects"])
            return distance(a.pose, b.pose) >= float(e["value"])
        if kind == "pose-near":
            obj = self.world.objects[e["object"]]
            goal, _ = self._resolve_to(e["to"])
            return distance(obj.pose, goal) <= float(e.get("eps", ARRIVAL_EPS_M))
        if kind == "focus-is":
            return self.engine.focused(e["hand"]) == e["value"]
        if kind == "active-is":
            for bid in sorted(self.engine.bindings):
                binding = self.engine.bindings[bid]
                if binding.kind == "one-to-many":
                    return binding.active.get(e["site"]) == e["value"]
            return False
        if kind == "authority-is":
            binding = self.engine.binding_of_virtual(e["object"])
            return binding is not None and binding.authority_site == e["value"]
        raise ValueError(f"unknown check kind {kind!r}")

    # -- relay helpers ---------------------------------------------------------

    def _publish_event(self, site: str, payload: dict) -> None:
        self.site_clients[site].publish(
            self.namespace, "scenario-event", payload, sent_at=self.now
        )

    def _publish_retarget(self, proxy_id: str, task: RetargetTask) -> None:
        site = self.world.proxies[proxy_id].site
        self.site_clients[site].publish(
            self.namespace, "retarget", task.as_dict(), sent_at=self.now
        )

    def _publish_binding_snapshot(self, site: str) -> None:
        self.site_clients[site].publish(
            self.namespace, "binding", self.engine.snapshot(), sent_at=self.now
        )

    def _push_display(self, due: float, kind: str, payload: dict) -> None:
        self._display_tie += 1
        heapq.heappush(self.displays, (due, self._display_tie, kind, payload))

    # -- tick pipeline -----------------------------------------------------------

    def _synthesize_frames(self) -> List[TrackedFrame]:
        frames: List[TrackedFrame] = []
        taken = set()
        for f in self.external_frames:
            frames.append(TrackedFrame(f.subject_id, f.pose, self.now))
            taken.add(f.subject_id)
        self.external_frames = []
        done_hands: List[str] = []
        for hand in sorted(self.hand_motions):
            if hand in taken:
                continue
            motion = self.hand_motions[hand]
            pose, arrived = motion.pose_at(self.now)
            frames.append(TrackedFrame(hand, pose, self.now))
            if arrived:
                done_hands.append(hand)
        for hand in sorted(self.gesture_motions):
            motion = self.gesture_motions[hand]
            if motion.t0 >= self.now or hand in taken:
                continue
            pose = motion.sample_at(self.now)
            if pose is not None and not any(f.subject_id == hand for f in frames):
                frames.append(TrackedFrame(hand, pose, self.now))
        self._arrived_hands = done_hands
        return frames

    def _after_world_tick(self) -> None:
        # releases happen the tick the hand lands, before new observations
        for hand in self._arrived_hands:
            motion = self.hand_motions.pop(hand)
            if motion.on_arrival is not None:
                self._finish_carry(motion.on_arrival, motion.goal)

    def _run_gestures(self) -> None:
        for hand in sorted(self.gesture_motions):
            motion = self.gesture_motions[hand]
            if self.now > motion.t0 + motion.duration_ms + 500:
                self.gesture_motions.pop(hand)
                continue
            if motion.fired or motion.t0 >= self.now:
                continue
            pose = motion.sample_at(self.now)
            if pose is None:
                continue
            event = self.gesture_streams[hand].push_sample(
                WristSample(hand, pose, self.now)
            )
            if event is None:
                continue
            motion.fired = True
            self._handle_gesture_event(motion, event, pose)

    def _handle_gesture_event(self, motion, event, wrist_pose: Pose2D) -> None:
        e = motion.event
        site = motion.site
        site_objects = {
            oid: obj
            for oid, obj in self.world.objects.items()
            if self.object_site[oid] == site
        }
        user = TrackedFrame(motion.hand_id, wrist_pose, self.now)
        resolved = resolve_target(event, user, site_objects, self.workspace)
        if resolved is None:
            return
        object_id, goal = resolved
        ok = event.kind == e["kind"]
        if e.get("expect_object") is not None and object_id != e["expect_object"]:
            ok = False
        if e.get("expect_anchor") is not None:
            if distance(goal, self.workspace.anchor(e["expect_anchor"])) > 1e-9:
                ok = False
        proxy_id = self._proxy_for_object(object_id, site)
        proxy = self.world.proxies[proxy_id]
        try:
            plan = plan_path(
                proxy, goal, self._site_others(proxy), workspace=self.workspace,
                now_ms=self.now, other_plans=self.world.plans,
            )
        except RouteBlocked:
            self.metrics.checks[f"gesture-route-{self.metrics.gesture_total}"] = False
            return
        self.move_counter += 1
        record = MoveRecord(
            move=self.move_counter,
            object_id=object_id,
            proxy_id=proxy_id,
            kind="gesture",
            grasp_ms=self.now,
            distance_m=distance(proxy.pose, goal),
            to_anchor=e.get("expect_anchor"),
            waypoints=len(plan.waypoints),
        )
        self.metrics.moves.append(record)
        if plan.waypoints:
            self.world.set_plan(plan)
            self.gesture_plans[proxy_id] = record
            self.gesture_expect[proxy_id] = (object_id, goal if ok else None)
        else:
            record.arrival_ms = float(self.now)
            if ok:
                self.metrics.gesture_correct += 1

    def _run_focus_dispatch(self) -> None:
        for bid in sorted(self.engine.bindings):
            binding = self.engine.bindings[bid]
            if binding.kind != "one-to-many":
                continue
            objects = {
                vid: self.world.objects[vid]
                for vid in binding.virtual_ids
                if vid in self.world.objects
            }
            for site in sorted(set(binding.proxy_sites.values())):
                hands = [
                    h for h, s in sorted(self.hand_site.items())
                    if s == site and h in self.world.hands
                ]
                for hand in hands:
                    frame = TrackedFrame(hand, self.world.hands[hand], self.now)
                    focus = self.engine.update_focus(hand, objects, frame)
                    if self.world.objects[focus].held_by is not None:
                        continue
                    if binding.target.get(site) != focus or site not in binding.active:
                        prev = binding.active.get(site)
                        try:
                            chosen = self.engine.dispatch_nearest(
                                binding,
                                objects[focus].pose,
                                site,
                                self.world.proxies,
                                virtual_id=focus,
                            )
                        except UnserviceableDispatch:
                            continue
                        if prev is not None and prev != chosen:
                            self.world.clear_plan(prev)
                        self.metrics.reassignments += 1
                        self._issue_plain_plan(chosen, objects[focus].pose)
                        self._publish_binding_snapshot(site)

    def _issue_plain_plan(self, proxy_id: str, goal: Pose2D) -> None:
        proxy = self.world.proxies[proxy_id]
        try:
            plan = plan_path(
                proxy, goal, self._site_others(proxy), workspace=self.workspace,
                now_ms=self.now, other_plans=self.world.plans,
            )
        except RouteBlocked:
            return
        if plan.waypoints:
            self.world.set_plan(plan)
        else:
            self.world.clear_plan(proxy_id)

    def _run_converge(self, orders) -> None:
        for order in orders:
            if order.kind != "converge":
                continue
            proxy = self.world.proxies[order.proxy_id]
            goal = order.goal
            belief = self.belief.get((proxy.site, self._order_subject(order)))
            if belief is not None:
                goal = belief
            last = self._last_converge_goal.get(order.proxy_id)
            if (
                last is not None
                and distance(last, goal) <= 1e-9
                and order.proxy_id in self.world.plans
            ):
                continue
            self._last_converge_goal[order.proxy_id] = goal
            self._issue_plain_plan(order.proxy_id, goal)

    def _order_subject(self, order) -> str:
        binding = self.engine.binding_of_proxy(order.proxy_id)
        return binding.virtual_ids[0] if binding else ""

    def _run_pursuits(self) -> None:
        for pursuit in list(self.pursuits):
            if self.now > pursuit.until:
                self.pursuits.remove(pursuit)
                self.world.clear_plan(pursuit.proxy_id)
                continue
            hand_pose = self.world.hands.get(pursuit.hand_id)
            if hand_pose is None:
                continue
            proj = pursuit.project
            x = min(max(hand_pose.x, proj["min"]), proj["max"])
            goal = Pose2D(x, proj["y"])
            proxy = self.world.proxies[pursuit.proxy_id]
            if self.now - pursuit.started > pursuit.grace_ms:
                err = distance(proxy.pose, goal)
                if err > pursuit.max_error:
                    pursuit.max_error = err
            if distance(proxy.pose, goal) > 1e-9:
                self._issue_plain_plan(pursuit.proxy_id, goal)
            else:
                self.world.clear_plan(pursuit.proxy_id)

    def _observe_carries(self) -> None:
        for object_id in sorted(self.scheduler.tasks):
            task = self.scheduler.tasks[object_id]
            if task.state != "active":
                continue
            obj = self.world.objects[object_id]
            if obj.held_by is None:
                continue
            vel = self.velocity.velocity(obj.held_by)
            self.scheduler.observe(object_id, obj.pose, vel, self.now)

    def _capture_arrivals(self) -> None:
        for task, record in self.records_open:
            if record.arrival_ms is not None:
                continue
            if task.proxy_id in self.world.plans:
                continue
            if task.has_real_plan:
                arrived = self.world.arrivals.get(task.proxy_id)
                if (
                    task.state in ("released", "settled")
                    and arrived is not None
                    and task.depart_time is not None
                    and arrived >= task.depart_time - 1e-9
                ):
                    record.arrival_ms = arrived
            elif task.state in ("released", "settled"):
                record.arrival_ms = (
                    task.estimated_arrival
                    if task.estimated_arrival is not None
                    else float(task.grasp_time)
                )
            if record.arrival_ms is not None:
                record.revisions = task.revision
                record.best_effort = task.best_effort
                if record.display_ms is not None and record.slack_ms is None:
                    record.slack_ms = record.display_ms - record.arrival_ms

    def _capture_gesture_arrivals(self) -> None:
        for proxy_id in sorted(self.gesture_plans):
            if proxy_id in self.world.plans:
                continue
            arrived = self.world.arrivals.get(proxy_id)
            if arrived is None:
                continue
            record = self.gesture_plans.pop(proxy_id)
            record.arrival_ms = arrived
            object_id, goal = self.gesture_expect.pop(proxy_id, ("", None))
            if goal is not None and object_id in self.world.objects:
                if distance(self.world.objects[object_id].pose, goal) <= ARRIVAL_EPS_M:
                    self.metrics.gesture_correct += 1

    def _publish_frames(self, frames: List[TrackedFrame]) -> None:
        for f in frames:
            site = self.hand_site.get(f.subject_id)
            if site is not None:
                self.site_clients[site].publish(
                    self.namespace, "frame", f.as_dict(), sent_at=self.now
                )
        for oid in sorted(self.world.objects):
            obj = self.world.objects[oid]
            prev = self._last_object_frame.get(oid)
            if prev is None or distance(prev, obj.pose) > 1e-12:
                self._last_object_frame[oid] = obj.pose
                self.site_clients[self.object_site[oid]].publish(
                    self.namespace,
                    "frame",
                    TrackedFrame(oid, obj.pose, self.now).as_dict(),
                    sent_at=self.now,
                )

    def _drain_relay(self) -> None:
        for site in sorted(self.site_clients):
            client = self.site_clients[site]
            for delivered_at, msg in client.inbox:
                self.metrics_latencies.append(delivered_at - msg.sent_at)
                if msg.msg_type == "frame":
                    self.belief[(site, msg.payload["subject_id"])] = Pose2D.from_dict(
                        msg.payload["pose"]
                    )
                elif msg.msg_type == "scenario-event":
                    if msg.payload.get("event") == "release":
                        self._push_display(
                            delivered_at + self.latency, "release", msg.payload
                        )
            client.inbox.clear()

    def _process_displays(self) -> None:
        while self.displays and self.displays[0][0] <= self.now:
            due, _, kind, payload = heapq.heappop(self.displays)
            if kind != "release":
                continue
            move = payload.get("move")
            record = next((r for r in self.metrics.moves if r.move == move), None)
            if record is None:
                continue
            proxy = self.world.proxies[record.proxy_id]
            goal = Pose2D.from_dict(payload["pose"])
            in_place = distance(proxy.pose, goal) <= ARRIVAL_EPS_M
            arrived_in_time = (
                record.arrival_ms is not None and record.arrival_ms <= due + 1e-6
            )
            if not (in_place and arrived_in_time):
                record.illusion_break = True
                self.metrics.illusion_breaks += 1
            task = self.scheduler.tasks.get(record.object_id)
            if task is not None and task.state == "released":
                self.scheduler.settle(record.object_id)

    # -- main loop -----------------------------------------------------------------

    def step(self) -> None:
        """Advance exactly one tick of the whole system."""
        self.now += TICK_MS
        self.relay.pump(self.now)
        frames = self._synthesize_frames()
        for f in frames:
            self.velocity.update(f.subject_id, f.pose, f.timestamp)
        self.world.advance_tick(frames)
        self._after_world_tick()
        self._process_events()
        orders = self.engine.refresh(self.world.objects, self.world.proxies)
        self._run_focus_dispatch()
        self._run_gestures()
        self._observe_carries()
        self._run_converge(orders)
        self._run_pursuits()
        self._capture_arrivals()
        self._capture_gesture_arrivals()
        self._publish_frames(frames)
        self.relay.pump(self.now)
        self._drain_relay()
        self._process_displays()
        if self.on_snapshot is not None or self.collect_states:
            if (self.now // TICK_MS) % self.state_stride == 0:
                snap = self._stream_state()
                if self.on_snapshot is not None:
                    self.on_snapshot(snap)
                if self.collect_states:
                    self.states.append(snap)

    def run(self) -> RunResult:
        last_event_at = self.events[-1]["at"] if self.events else 0
        hard_cap = last_event_at + RUN_HARD_CAP_MS
        while True:
            self.step()
            if self._finished(last_event_at):
                break
            if self.now >= hard_cap:
                self.metrics.checks["run-completed"] = False
                break
        self._finalize()
        return RunResult(
            metrics=self.metrics,
            final_state=self.world.snapshot().as_dict(),
            states=self.states,
        )

    def _finished(self, last_event_at: int) -> bool:
        if self.now < last_event_at + SETTLE_GRACE_MS:
            return False
        if self.event_cursor < len(self.events):
            return False
        if self.scheduler.tasks or self.displays or self.pursuits:
            return False
        if self.world.plans or self.gesture_plans:
            return False
        if self.relay.pending:
            return False
        return True

    def _finalize(self) -> None:
        tolerance = float(self.script.metadata.get("tracking_tolerance_m", 0.05))
        for i, pursuit in enumerate(self._all_pursuits):
            self.metrics.checks[f"pursuit-{i}-tracking"] = (
                pursuit.max_error <= tolerance
            )
        self.metrics.duration_ms = self.now
        self.metrics.digest = self.world.digest.hexdigest()
        self.metrics.min_clearance_m = self.world.min_clearance
        if self.world.speed_audit:
            self.metrics.max_speed_ratio = max(self.world.speed_audit.values())
        if self.world.turn_audit:
            self.metrics.max_turn_ratio = max(self.world.turn_audit.values())
        lat = self.metrics_latencies
        self.metrics.relay_latency_p50 = percentile(lat, 50)
        self.metrics.relay_latency_p95 = percentile(lat, 95)
        self.metrics.relay_latency_max = max(lat) if lat else 0.0

    # -- streaming ------------------------------------------------------------

    def _stream_state(self) -> dict:
        snap = self.world.snapshot().as_dict()
        snap["bindings"] = self.engine.snapshot()
        snap["tasks"] = {
            oid: self.scheduler.tasks[oid].as_dict()
            for oid in sorted(self.scheduler.tasks)
        }
        snap["scenario"] = self.script.name
        return snap


def run_scenario(
    script: ScenarioScript,
    *,
    collect_states: bool = False,
    state_stride: int = 1,
    on_snapshot: Optional[Callable[[dict], None]] = None,
) -> RunResult:
    runner = ScenarioRunner(
        script,
        collect_states=collect_states,
        state_stride=state_stride,
        on_snapshot=on_snapshot,
    )
    return runner.run()


SWEEP_PARAMETERS = ("artificial_latency", "robot_speed", "hand_speed", "table_size")


def _swept_script(script: ScenarioScript, parameter: str, value) -> ScenarioScript:
    d = script.as_dict()
    if parameter == "artificial_latency":
        d["artificial_latency_ms"] = int(value)
    elif parameter == "hand_speed":
        d["hand_speed"] = float(value)
    elif parameter == "robot_speed":
        for p in d["proxies"]:
            p["max_linear_speed"] = float(value)
    elif parameter == "table_size":
        old = float(d["workspace"].get("width", 0.9))
        factor = float(value) / old
        d["workspace"]["width"] = float(value)
        d["workspace"]["depth"] = float(value)
        for entity in d["objects"] + d["proxies"]:
            entity["pose"]["x"] *= factor
            entity["pose"]["y"] *= factor
        for e in d["events"]:
            to = e.get("to")
            if isinstance(to, dict):
                to["x"] *= factor
                to["y"] *= factor
            if "wrist" in e:
                e["wrist"]["x"] *= factor
                e["wrist"]["y"] *= factor
    else:
        raise ValueError(
            f"unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}"
        )
    return ScenarioScript.from_dict(d)


def sweep(parameter: str, values, script: ScenarioScript) -> List[dict]:
    """One deterministic run per value; returns summary rows for the table."""
    rows = []
    for value in values:
        result = run_scenario(_swept_script(script, parameter, value))
        rows.append(summary_row(result.metrics, parameter, value))
    return rows
