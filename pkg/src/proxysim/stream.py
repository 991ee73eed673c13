"""Interactive bridge between the scenario engine and a browser sandbox.

A :class:`UiSession` owns a :class:`~proxysim.runner.ScenarioRunner` built
from a scenario whose scripted events have been stripped, and advances it one
tick at a time while a remote client injects grasp/drag/release/gesture
commands.  :class:`StreamServer` exposes the session over a WebSocket with a
small JSON envelope: ``hello``/``state``/``ack``/``error`` downstream,
command documents upstream.  Everything the client does funnels into the same
deterministic tick pipeline the scripted runs use, so a recorded command log
can be replayed bit-for-bit with :func:`replay_commands`.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .core import TICK_MS, Pose2D, TrackedFrame, Workspace, distance
from .runner import SETTLE_GRACE_MS, RunResult, ScenarioRunner
from .scripts import ScenarioScript

COMMAND_KINDS = ("grasp", "drag", "release", "gesture", "set-latency")


class UiCommandError(ValueError):
    """A command document is malformed or cannot be applied."""


def _advance(pos: Pose2D, target: Pose2D, step: float) -> Pose2D:
    d = distance(pos, target)
    if d <= step or d == 0.0:
        return Pose2D(target.x, target.y, pos.heading)
    f = step / d
    return Pose2D(pos.x + (target.x - pos.x) * f, pos.y + (target.y - pos.y) * f,
                  pos.heading)


def _interp(pts: Sequence[Tuple[float, Pose2D]], t: float) -> Pose2D:
    if t <= pts[0][0]:
        return pts[0][1]
    for (t0, p0), (t1, p1) in zip(pts, pts[1:]):
        if t <= t1:
            if t == t1:  # exact endpoints; no float residue at sample times
                return p1
            span = t1 - t0
            f = 0.0 if span <= 0 else (t - t0) / span
            return Pose2D(p0.x + (p1.x - p0.x) * f, p0.y + (p1.y - p0.y) * f)
    return pts[-1][1]


def resample_drag(
    points: Sequence[dict],
    *,
    hand_speed: float,
    tick_ms: int = TICK_MS,
    workspace: Optional[Workspace] = None,
    start_ms: int = 0,
) -> List[Tuple[int, Pose2D]]:
    """Convert a recorded pointer path into fixed-rate wrist frames.

    ``points`` are ``{"x", "y", "t"}`` samples at any rate; ``t`` is in
    milliseconds.  Output frames land on the tick grid and never move faster
    than ``hand_speed``, so a replayed drag cannot outrun what a tracker
    would report for a real hand.  Out-of-bounds samples are clamped to the
    workspace edge before the speed limit is applied.
    """
    if not points:
        raise UiCommandError("drag path is empty")
    pts = [
        (float(p["t"]), Pose2D(float(p["x"]), float(p["y"]))) for p in points
    ]
    if any(t1 < t0 for (t0, _), (t1, _) in zip(pts, pts[1:])):
        raise UiCommandError("drag path timestamps must be non-decreasing")

    def clamp(p: Pose2D) -> Pose2D:
        return workspace.clamp(p) if workspace is not None else p

    duration = pts[-1][0] - pts[0][0]
    step = hand_speed * tick_ms / 1000.0
    pos = clamp(pts[0][1])
    frames: List[Tuple[int, Pose2D]] = []
    k = 0
    while True:
        k += 1
        rel = k * tick_ms
        target = clamp(_interp(pts, pts[0][0] + min(rel, duration)))
        pos = _advance(pos, target, step)
        frames.append((start_ms + rel, pos))
        if rel >= duration and distance(pos, target) <= 1e-12:
            return frames


@dataclass
class _UiCarry:
    object_id: str
    site: str
    pose: Pose2D    # hand pose, advanced at most hand_speed per tick
    target: Pose2D  # latest pointer position


class UiSession:
    """One interactive run: scripted entities, user-driven events.

    Commands are queued by :meth:`apply` and take effect at the next tick
    boundary, in arrival order, exactly like scripted events do.
    """

    def __init__(self, script: ScenarioScript, *, keep_events: bool = False):
        doc = script.as_dict()
        if not keep_events:
            doc["events"] = []
        self.script = ScenarioScript.from_dict(doc)
        self.runner = ScenarioRunner(self.script)
        self.workspace = self.runner.workspace
        self._queue: List[dict] = []
        self._carries: Dict[str, _UiCarry] = {}  # hand id -> active carry
        self._last_command_at = 0
        self._finalized = False

    # -- command intake ---------------------------------------------------------

    def apply(self, cmd: dict) -> None:
        """Validate shape and queue for the next tick."""
        kind = cmd.get("kind")
        if kind not in COMMAND_KINDS:
            raise UiCommandError(f"unknown command kind: {kind!r}")
        if kind == "grasp":
            if "object" not in cmd:
                raise UiCommandError("grasp needs an 'object'")
            if cmd["object"] not in self.runner.world.objects:
                raise UiCommandError(f"unknown object: {cmd['object']!r}")
        if kind == "drag" and "pose" not in cmd:
            raise UiCommandError("drag needs a 'pose'")
        if kind == "gesture":
            for key in ("gesture", "wrist", "motion", "speed", "duration_ms"):
                if key not in cmd:
                    raise UiCommandError(f"gesture needs {key!r}")
        if kind == "set-latency" and "value" not in cmd:
            raise UiCommandError("set-latency needs a 'value'")
        self._queue.append(cmd)

    def _apply_now(self, cmd: dict) -> None:
        kind = cmd["kind"]
        runner = self.runner
        hand = cmd.get("hand", "ui-hand")
        if kind == "grasp":
            object_id = cmd["object"]
            if object_id not in runner.world.objects:
                raise UiCommandError(f"unknown object: {object_id!r}")
            if hand in self._carries:
                raise UiCommandError(f"hand {hand!r} is already carrying")
            site = cmd.get("site", runner.object_site[object_id])
            runner.begin_ui_carry(object_id, hand, site)
            pose = runner.world.objects[object_id].pose
            self._carries[hand] = _UiCarry(object_id, site, pose, pose)
        elif kind == "drag":
            carry = self._carries.get(hand)
            if carry is None:
                raise UiCommandError(f"hand {hand!r} is not carrying")
            p = cmd["pose"]
            carry.target = self.workspace.clamp(
                Pose2D(float(p["x"]), float(p["y"]))
            )
        elif kind == "release":
            carry = self._carries.pop(hand, None)
            if carry is None:
                raise UiCommandError(f"hand {hand!r} is not carrying")
            runner.finish_ui_carry(carry.object_id, carry.pose)
        elif kind == "gesture":
            site = cmd.get("site", self.script.sites[0])
            wrist = cmd["wrist"]
            runner._ev_gesture(
                {
                    "type": "gesture",
                    "site": site,
                    "hand": hand,
                    "kind": cmd["gesture"],
                    "wrist": {"x": float(wrist["x"]), "y": float(wrist["y"]),
                              "heading": float(wrist.get("heading", 0.0))},
                    "motion": {"x": float(cmd["motion"]["x"]),
                               "y": float(cmd["motion"]["y"])},
                    "speed": float(cmd["speed"]),
                    "duration_ms": int(cmd["duration_ms"]),
                }
            )
        elif kind == "set-latency":
            runner.set_latency(int(cmd["value"]))

    # -- ticking ------------------------------------------------------------------

    def tick(self) -> List[Tuple[dict, str]]:
        """Apply queued commands, stage drag frames, advance one tick.

        Returns ``(command, reason)`` pairs for commands that failed; the
        tick itself always completes.
        """
        failures: List[Tuple[dict, str]] = []
        queued, self._queue = self._queue, []
        for cmd in queued:
            try:
                self._apply_now(cmd)
                self._last_command_at = self.runner.now
            except UiCommandError as exc:
                failures.append((cmd, str(exc)))
        step = self.runner.hand_speed * TICK_MS / 1000.0
        for hand in sorted(self._carries):
            carry = self._carries[hand]
            carry.pose = _advance(carry.pose, carry.target, step)
            self.runner.external_frames.append(
                TrackedFrame(hand, carry.pose, self.runner.now)
            )
        self.runner.step()
        return failures

    @property
    def now(self) -> int:
        return self.runner.now

    def state(self) -> dict:
        return self.runner._stream_state()

    def idle(self) -> bool:
        """True when nothing user-visible is still in flight."""
        r = self.runner
        if self._queue or self._carries:
            return False
        if r.scheduler.tasks or r.displays or r.world.plans or r.gesture_plans:
            return False
        if r.gesture_motions or r.hand_motions:
            return False
        return not r.relay.pending

    def result(self) -> RunResult:
        if not self._finalized:
            self.runner._finalize()
            self._finalized = True
        return RunResult(
            metrics=self.runner.metrics,
            final_state=self.runner.world.snapshot().as_dict(),
            states=self.runner.states,
        )


def replay_commands(
    script: ScenarioScript,
    commands: Iterable[dict],
    *,
    settle_ms: int = SETTLE_GRACE_MS,
    hard_cap_ms: int = 180_000,
) -> RunResult:
    """Deterministically re-run a recorded interactive session.

    Each command needs an ``at_ms`` stamp; it is applied at the first tick
    boundary where the session clock has reached it, preserving log order
    between equal stamps.
    """
    session = UiSession(script)
    pending = sorted(enumerate(commands), key=lambda kv: (kv[1]["at_ms"], kv[0]))
    pending_cmds = [cmd for _, cmd in pending]
    last_at = pending_cmds[-1]["at_ms"] if pending_cmds else 0
    i = 0
    while True:
        while i < len(pending_cmds) and pending_cmds[i]["at_ms"] <= session.now:
            session.apply(pending_cmds[i])
            i += 1
        failures = session.tick()
        if failures:
            cmd, reason = failures[0]
            raise UiCommandError(f"replay failed at {session.now} ms: {reason}")
        if i >= len(pending_cmds) and session.idle() and (
            session.now >= last_at + settle_ms
        ):
            return session.result()
        if session.now >= last_at + hard_cap_ms:
            raise UiCommandError("replay did not settle within the hard cap")


class StreamServer:
    """WebSocket front door for a live sandbox session.

    Paces the session at ``realtime`` times the simulated rate, broadcasts a
    ``state`` document every ``stride`` ticks, and acks or rejects each client
    command.  Wire documents:

    - server: ``{"type": "hello", ...}``, ``{"type": "state", "t": ms,
      "state": {...}}``, ``{"type": "ack", "seq": n}``,
      ``{"type": "error", "seq": n, "reason": str}``
    - client: ``{"seq": n, "command": {"kind": ..., ...}}`` (a bare command
      document is accepted too).
    """

    def __init__(
        self,
        script: ScenarioScript,
        *,
        host: str = "127.0.0.1",
        port: int = 8787,
        stride: int = 2,
        realtime: float = 1.0,
    ):
        self.session = UiSession(script)
        self.host = host
        self.port = port
        self.stride = max(1, stride)
        self.realtime = realtime
        self._clients: set = set()
        self._started = asyncio.Event()

    def _hello(self) -> dict:
        script = self.session.script
        return {
            "type": "hello",
            "scenario": script.name,
            "tick_ms": TICK_MS,
            "stride": self.stride,
            "hand_speed": script.hand_speed,
            "latency_ms": self.session.runner.latency,
            "sites": list(script.sites),
            "workspace": self.session.workspace.as_dict(),
            "objects": [o for o in script.objects],
            "proxies": [p for p in script.proxies],
        }

    async def _send(self, ws, doc: dict) -> None:
        try:
            await ws.send(json.dumps(doc, sort_keys=True))
        except Exception:
            self._clients.discard(ws)

    async def _broadcast(self, doc: dict) -> None:
        data = json.dumps(doc, sort_keys=True)
        stale = []
        for ws in list(self._clients):
            try:
                await ws.send(data)
            except Exception:
                stale.append(ws)
        for ws in stale:
            self._clients.discard(ws)

    async def _client(self, ws) -> None:
        self._clients.add(ws)
        await self._send(ws, self._hello())
        try:
            async for raw in ws:
                try:
                    doc = json.loads(raw)
                except ValueError:
                    await self._send(ws, {"type": "error", "seq": None,
                                          "reason": "not JSON"})
                    continue
                seq = doc.get("seq")
                cmd = doc.get("command", doc)
                try:
                    self.session.apply(cmd)
                except UiCommandError as exc:
                    await self._send(ws, {"type": "error", "seq": seq,
                                          "reason": str(exc)})
                else:
                    await self._send(ws, {"type": "ack", "seq": seq})
        finally:
            self._clients.discard(ws)

    async def _ticker(self) -> None:
        loop = asyncio.get_running_loop()
        period = TICK_MS / 1000.0 / max(self.realtime, 1e-6)
        ticks = 0
        while True:
            t0 = loop.time()
            failures = self.session.tick()
            for cmd, reason in failures:
                await self._broadcast(
                    {"type": "error", "seq": None, "command": cmd,
                     "reason": reason}
                )
            ticks += 1
            if ticks % self.stride == 0:
                await self._broadcast(
                    {"type": "state", "t": self.session.now,
                     "state": self.session.state()}
                )
            await asyncio.sleep(max(0.0, period - (loop.time() - t0)))

    async def serve(self) -> None:
        try:
            from websockets.asyncio.server import serve
        except ImportError as exc:  # pragma: no cover
            raise RuntimeError(
                "stream-ui needs the 'websockets' package (pip install websockets)"
            ) from exc
        async with serve(self._client, self.host, self.port) as server:
            self.port = server.sockets[0].getsockname()[1] if server.sockets else self.port
            self._started.set()
            ticker = asyncio.create_task(self._ticker())
            try:
                await asyncio.Future()
            finally:
                ticker.cancel()
