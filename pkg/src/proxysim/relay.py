"""Central relay: clients register as emitters/sinks per namespace; the
relay fans messages out with per-emitter FIFO order, retains last-value
state for late joiners, and can inject artificial delivery latency.

RelayCore is transport-agnostic and fully deterministic (virtual clock,
seeded jitter); InProcRelay drives it from a scenario's tick loop, and the
TCP service in relay_server reuses the same core.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Tuple

MSG_TYPES = ("frame", "binding", "retarget", "scenario-event", "ui-command")
ROLES = ("emitter", "sink", "both")


class RelayError(Exception):
    """Base for relay protocol violations."""


class RegistrationError(RelayError):
    pass


class PublishError(RelayError):
    pass


class SequenceFault(RelayError):
    """Per-emitter seq gap; the session must re-sync (re-register)."""


@dataclass(frozen=True)
class RelayMessage:
    namespace: str
    emitter_id: str
    msg_type: str
    seq: int
    sent_at: int
    payload: dict

    def __post_init__(self) -> None:
        if self.msg_type not in MSG_TYPES:
            raise ValueError(f"unknown msg_type {self.msg_type!r}")
        if self.seq < 1:
            raise ValueError("seq starts at 1")

    def as_dict(self) -> dict:
        return {
            "namespace": self.namespace,
            "emitter_id": self.emitter_id,
            "msg_type": self.msg_type,
            "seq": self.seq,
            "sent_at": self.sent_at,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RelayMessage":
        return cls(
            d["namespace"],
            d["emitter_id"],
            d["msg_type"],
            d["seq"],
            d["sent_at"],
            d["payload"],
        )


@dataclass(frozen=True)
class ClientRegistration:
    client_id: str
    namespaces: Tuple[str, ...]
    role: str  # emitter | sink | both
    site: str = ""

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")

    @property
    def receives(self) -> bool:
        return self.role in ("sink", "both")

    @property
    def emits(self) -> bool:
        return self.role in ("emitter", "both")

    def as_dict(self) -> dict:
        return {
            "client_id": self.client_id,
            "namespaces": list(self.namespaces),
            "role": self.role,
            "site": self.site,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClientRegistration":
        return cls(
            d["client_id"], tuple(d["namespaces"]), d["role"], d.get("site", "")
        )


@dataclass
class Delivery:
    """One scheduled fan-out: ``msg`` to ``client_id`` no earlier than ``due_ms``."""

    due_ms: float
    client_id: str
    msg: RelayMessage


class RelayCore:
    """Deterministic relay state machine, independent of any transport.

    register() returns the snapshot burst owed to the new client;
    publish() validates and returns the fan-out schedule. The caller owns
    actual delivery (in-process heap or sockets).
    """

    def __init__(
        self,
        *,
        retention: bool = True,
        echo_origin: bool = False,
        jitter_seed: int = 0,
    ):
        self.retention = retention
        self.echo_origin = echo_origin
        self.sessions: Dict[str, ClientRegistration] = {}
        self.retained: Dict[Tuple[str, str, str], RelayMessage] = {}
        self.last_seq: Dict[Tuple[str, str], int] = {}
        self.latency: Dict[str, Tuple[int, int]] = {}  # ns -> (delay, jitter)
        self._rng = random.Random(jitter_seed)
        self._last_due: Dict[Tuple[str, str], float] = {}

    # -- registration ---------------------------------------------------------

    def register(self, reg: ClientRegistration) -> List[RelayMessage]:
        if reg.client_id in self.sessions:
            raise RegistrationError(f"client id {reg.client_id!r} already registered")
        if not reg.namespaces:
            raise RegistrationError("registration needs at least one namespace")
        self.sessions[reg.client_id] = reg
        if not reg.receives:
            return []
        snapshot = [
            msg
            for (ns, emitter, _), msg in sorted(self.retained.items())
            if ns in reg.namespaces
        ]
        return snapshot

    def unregister(self, client_id: str) -> None:
        self.sessions.pop(client_id, None)

    # -- publication -----------------------------------------------------------

    def inject_latency(self, namespace: str, delay: int, jitter: int = 0) -> None:
        if delay < 0 or jitter < 0:
            raise ValueError("delay and jitter must be non-negative")
        self.latency[namespace] = (delay, jitter)

    def publish(self, client_id: str, msg: RelayMessage, now_ms: int) -> List[Delivery]:
        reg = self.sessions.get(client_id)
        if reg is None:
            raise PublishError(f"unknown session {client_id!r}")
        if not reg.emits:
            raise PublishError(f"session {client_id!r} is not an emitter")
        if msg.namespace not in reg.namespaces:
            raise PublishError(
                f"session {client_id!r} not registered in {msg.namespace!r}"
            )
        key = (msg.namespace, msg.emitter_id)
        expected = self.last_seq.get(key, 0) + 1
        if msg.seq != expected:
            raise SequenceFault(
                f"{msg.emitter_id} in {msg.namespace}: got seq {msg.seq}, "
                f"expected {expected}"
            )
        self.last_seq[key] = msg.seq
        if self.retention:
            self.retained[(msg.namespace, msg.emitter_id, msg.msg_type)] = msg

        delay, jitter = self.latency.get(msg.namespace, (0, 0))
        due = float(now_ms + delay)
        if jitter:
            due += self._rng.uniform(-jitter, jitter)
        due = max(due, float(now_ms))
        # per-emitter FIFO survives jitter: never due before the previous one
        due = max(due, self._last_due.get(key, 0.0))
        self._last_due[key] = due

        deliveries = []
        for cid in sorted(self.sessions):
            target = self.sessions[cid]
            if not target.receives or msg.namespace not in target.namespaces:
                continue
            if cid == client_id and not self.echo_origin:
                continue
            deliveries.append(Delivery(due_ms=due, client_id=cid, msg=msg))
        return deliveries


class InProcClient:
    """A relay client living inside a scenario process; received messages
    accumulate in ``inbox`` as (delivered_at_ms, RelayMessage)."""

    def __init__(self, relay: "InProcRelay", reg: ClientRegistration):
        self.relay = relay
        self.reg = reg
        self.client_id = reg.client_id
        self.inbox: List[Tuple[float, RelayMessage]] = []
        self._next_seq: Dict[Tuple[str, str], int] = {}

    def publish(
        self,
        namespace: str,
        msg_type: str,
        payload: dict,
        *,
        emitter_id: Optional[str] = None,
        sent_at: Optional[int] = None,
    ) -> RelayMessage:
        emitter = emitter_id or self.client_id
        key = (namespace, emitter)
        seq = self._next_seq.get(key, 0) + 1
        self._next_seq[key] = seq
        msg = RelayMessage(
            namespace=namespace,
            emitter_id=emitter,
            msg_type=msg_type,
            seq=seq,
            sent_at=self.relay.now_ms if sent_at is None else sent_at,
            payload=payload,
        )
        self.relay.publish(self.client_id, msg)
        return msg

    def drain(self) -> List[RelayMessage]:
        msgs = [m for _, m in self.inbox]
        self.inbox.clear()
        return msgs


class InProcRelay:
    """RelayCore plus a virtual-clock delivery heap for deterministic runs.

    The scenario loop advances the clock with pump(now_ms); deliveries due
    by then land in client inboxes in (due, publish order) sequence.
    """

    def __init__(self, **core_kwargs):
        self.core = RelayCore(**core_kwargs)
        self.now_ms = 0
        self._heap: List[Tuple[float, int, str, RelayMessage]] = []
        self._tie = 0
        self.clients: Dict[str, InProcClient] = {}
        self.delivered_log: List[Tuple[float, str, RelayMessage]] = []

    def connect(self, reg: ClientRegistration) -> InProcClient:
        snapshot = self.core.register(reg)
        client = InProcClient(self, reg)
        self.clients[reg.client_id] = client
        for msg in snapshot:
            client.inbox.append((float(self.now_ms), msg))
        return client

    def disconnect(self, client_id: str) -> None:
        self.core.unregister(client_id)
        self.clients.pop(client_id, None)

    def inject_latency(self, namespace: str, delay: int, jitter: int = 0) -> None:
        self.core.inject_latency(namespace, delay, jitter)

    def publish(self, client_id: str, msg: RelayMessage) -> None:
        for d in self.core.publish(client_id, msg, self.now_ms):
            self._tie += 1
            heapq.heappush(self._heap, (d.due_ms, self._tie, d.client_id, d.msg))

    def pump(self, now_ms: int) -> int:
        """Deliver everything due by now_ms; returns the delivery count."""
        if now_ms < self.now_ms:
            raise ValueError("relay clock cannot move backwards")
        self.now_ms = now_ms
        count = 0
        while self._heap and self._heap[0][0] <= now_ms:
            due, _, cid, msg = heapq.heappop(self._heap)
            client = self.clients.get(cid)
            if client is not None:
                client.inbox.append((due, msg))
                self.delivered_log.append((due, cid, msg))
                count += 1
        return count

    @property
    def pending(self) -> int:
        return len(self._heap)
