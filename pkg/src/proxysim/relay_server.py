"""TCP relay service and blocking client.

Wire format: every frame is a 4-byte big-endian length followed by a
canonical-JSON body. Envelope types:

  client → relay   {"type": "register", "registration": {...}}
                   {"type": "publish", "message": {...}}
                   {"type": "inject-latency", "namespace": .., "delay": .., "jitter": ..}
  relay → client   {"type": "registered", "snapshot_count": n}
                   {"type": "deliver", "message": {...}}   (snapshot then live)
                   {"type": "ack", "namespace": .., "seq": ..}
                   {"type": "ok"}
                   {"type": "fault", "reason": ..}          (seq gap; then close)
                   {"type": "error", "reason": ..}

The service shares RelayCore with the in-process relay, so protocol
semantics (FIFO, retention, latency injection) are identical.
"""

from __future__ import annotations

import asyncio
import json
import queue
import socket
import struct
import threading
import time
from typing import Dict, List, Optional, Tuple

from proxysim.canon import canonical_bytes
from proxysim.relay import (
    ClientRegistration,
    RegistrationError,
    RelayCore,
    RelayError,
    RelayMessage,
    SequenceFault,
)

MAX_FRAME = 16 * 1024 * 1024
_LEN = struct.Struct(">I")


def encode_frame(doc: dict) -> bytes:
    body = canonical_bytes(doc)
    return _LEN.pack(len(body)) + body


def decode_body(body: bytes) -> dict:
    return json.loads(body.decode("utf-8"))


async def _read_frame(reader: asyncio.StreamReader) -> Optional[dict]:
    try:
        header = await reader.readexactly(_LEN.size)
    except (asyncio.IncompleteReadError, ConnectionError):
        return None
    (length,) = _LEN.unpack(header)
    if length > MAX_FRAME:
        raise RelayError(f"frame of {length} bytes exceeds limit")
    try:
        body = await reader.readexactly(length)
    except (asyncio.IncompleteReadError, ConnectionError):
        return None
    return decode_body(body)


class RelayServer:
    """Asyncio TCP relay around a shared RelayCore.

    Timestamps are session-relative milliseconds from server start; jitter
    scheduling runs on the event loop. RelayCore assigns monotone due times
    per emitter, but the loop's timer heap does not order equal deadlines,
    so each (client, namespace, emitter) chain is scheduled with strictly
    increasing absolute deadlines to keep delivery FIFO.
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        *,
        retention: bool = True,
        echo_origin: bool = False,
        latency_table: Optional[Dict[str, Tuple[int, int]]] = None,
        jitter_seed: int = 0,
    ):
        self.host = host
        self.port = port
        self.core = RelayCore(
            retention=retention, echo_origin=echo_origin, jitter_seed=jitter_seed
        )
        if latency_table:
            for ns, (delay, jitter) in latency_table.items():
                self.core.inject_latency(ns, delay, jitter)
        self._server: Optional[asyncio.base_events.Server] = None
        self._start_monotonic = 0.0
        self._queues: Dict[str, asyncio.Queue] = {}
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        # (client, namespace, emitter) -> last scheduled loop deadline
        self._chain_deadline: Dict[Tuple[str, str, str], float] = {}

    # -- lifecycle ----------------------------------------------------------

    def now_ms(self) -> int:
        return int((time.monotonic() - self._start_monotonic) * 1000)

    async def start(self) -> None:
        self._loop = asyncio.get_running_loop()
        self._start_monotonic = time.monotonic()
        self._server = await asyncio.start_server(self._serve, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    async def serve_forever(self) -> None:
        await self.start()
        assert self._server is not None
        async with self._server:
            await self._server.serve_forever()

    # -- per-connection protocol ----------------------------------------------

    async def _serve(
        self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter
    ) -> None:
        client_id: Optional[str] = None
        outq: asyncio.Queue = asyncio.Queue()
        pump = asyncio.create_task(self._writer_task(writer, outq))
        try:
            first = await _read_frame(reader)
            if first is None or first.get("type") != "register":
                outq.put_nowait({"type": "error", "reason": "registration required"})
                return
            try:
                reg = ClientRegistration.from_dict(first["registration"])
                snapshot = self.core.register(reg)
            except (KeyError, TypeError, ValueError, RegistrationError) as exc:
                outq.put_nowait({"type": "error", "reason": str(exc)})
                return
            client_id = reg.client_id
            self._queues[client_id] = outq
            outq.put_nowait({"type": "registered", "snapshot_count": len(snapshot)})
            for msg in snapshot:
                outq.put_nowait({"type": "deliver", "message": msg.as_dict()})

            while True:
                doc = await _read_frame(reader)
                if doc is None:
                    return
                kind = doc.get("type")
                if kind == "publish":
                    try:
                        msg = RelayMessage.from_dict(doc["message"])
                        deliveries = self.core.publish(client_id, msg, self.now_ms())
                    except SequenceFault as exc:
                        outq.put_nowait({"type": "fault", "reason": str(exc)})
                        return
                    except (KeyError, TypeError, ValueError, RelayError) as exc:
                        outq.put_nowait({"type": "error", "reason": str(exc)})
                        continue
                    now = self.now_ms()
                    for d in deliveries:
                        self._schedule(d.client_id, d.msg, (d.due_ms - now) / 1000.0)
                    outq.put_nowait(
                        {"type": "ack", "namespace": msg.namespace, "seq": msg.seq}
                    )
                elif kind == "inject-latency":
                    try:
                        self.core.inject_latency(
                            doc["namespace"],
                            int(doc.get("delay", 0)),
                            int(doc.get("jitter", 0)),
                        )
                        outq.put_nowait({"type": "ok"})
                    except (KeyError, TypeError, ValueError) as exc:
                        outq.put_nowait({"type": "error", "reason": str(exc)})
                else:
                    outq.put_nowait(
                        {"type": "error", "reason": f"unknown frame type {kind!r}"}
                    )
        finally:
            if client_id is not None:
                self.core.unregister(client_id)
                self._queues.pop(client_id, None)
                for key in [k for k in self._chain_deadline if k[0] == client_id]:
                    del self._chain_deadline[key]
            outq.put_nowait(None)
            try:
                await asyncio.wait_for(pump, timeout=2.0)
            except asyncio.TimeoutError:
                pump.cancel()
            writer.close()
            try:
                await writer.wait_closed()
            except (ConnectionError, OSError):
                pass

    def _schedule(self, client_id: str, msg: RelayMessage, delay_s: float) -> None:
        assert self._loop is not None

        def deliver() -> None:
            q = self._queues.get(client_id)
            if q is not None:
                q.put_nowait({"type": "deliver", "message": msg.as_dict()})

        # Always go through a timer: a synchronous deliver could overtake a
        # past-due timer the loop has not processed yet. Strictly increasing
        # deadlines per chain make the timer heap respect FIFO.
        key = (client_id, msg.namespace, msg.emitter_id)
        when = self._loop.time() + max(0.0, delay_s)
        prev = self._chain_deadline.get(key)
        if prev is not None and when <= prev:
            when = prev + 1e-6
        self._chain_deadline[key] = when
        self._loop.call_at(when, deliver)

    async def _writer_task(
        self, writer: asyncio.StreamWriter, outq: asyncio.Queue
    ) -> None:
        while True:
            doc = await outq.get()
            if doc is None:
                return
            try:
                writer.write(encode_frame(doc))
                await writer.drain()
            except (ConnectionError, OSError):
                return


class ServerThread:
    """Runs a RelayServer on a dedicated event-loop thread (tests, CLI)."""

    def __init__(self, **kwargs):
        self.server = RelayServer(**kwargs)
        self._thread: Optional[threading.Thread] = None
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._started = threading.Event()

    def __enter__(self) -> "ServerThread":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    @property
    def port(self) -> int:
        return self.server.port

    def start(self) -> None:
        def run() -> None:
            loop = asyncio.new_event_loop()
            self._loop = loop
            asyncio.set_event_loop(loop)
            loop.run_until_complete(self.server.start())
            self._started.set()
            loop.run_forever()
            loop.run_until_complete(self.server.stop())
            loop.close()

        self._thread = threading.Thread(target=run, name="relay-server", daemon=True)
        self._thread.start()
        if not self._started.wait(timeout=5.0):
            raise RuntimeError("relay server failed to start")

    def stop(self) -> None:
        if self._loop is not None:
            self._loop.call_soon_threadsafe(self._loop.stop)
        if self._thread is not None:
            self._thread.join(timeout=5.0)
            self._thread = None


class RelayClient:
    """Blocking TCP client with a background reader thread.

    Deliveries land in ``deliveries``; acks/faults/errors resolve the
    pending request queue. Suitable for tests, scripted sites, and the
    UI stream bridge.
    """

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.timeout = timeout
        self.deliveries: "queue.Queue[RelayMessage]" = queue.Queue()
        self._control: "queue.Queue[dict]" = queue.Queue()
        self._next_seq: Dict[Tuple[str, str], int] = {}
        self.faulted: Optional[str] = None
        self._reader = threading.Thread(
            target=self._read_loop, name="relay-client", daemon=True
        )
        self._reader.start()

    # -- wire ------------------------------------------------------------------

    def _read_loop(self) -> None:
        buf = b""
        while True:
            try:
                chunk = self.sock.recv(65536)
            except OSError:
                break
            if not chunk:
                break
            buf += chunk
            while len(buf) >= _LEN.size:
                (length,) = _LEN.unpack(buf[: _LEN.size])
                if len(buf) < _LEN.size + length:
                    break
                body = buf[_LEN.size : _LEN.size + length]
                buf = buf[_LEN.size + length :]
                doc = decode_body(body)
                if doc.get("type") == "deliver":
                    self.deliveries.put(RelayMessage.from_dict(doc["message"]))
                else:
                    if doc.get("type") == "fault":
                        self.faulted = doc.get("reason", "")
                    self._control.put(doc)

    def _send(self, doc: dict) -> None:
        self.sock.sendall(encode_frame(doc))

    def _expect(self, *types: str) -> dict:
        doc = self._control.get(timeout=self.timeout)
        if doc.get("type") not in types:
            raise RelayError(f"unexpected reply {doc!r}")
        return doc

    # -- protocol ---------------------------------------------------------------

    def register(
        self, client_id: str, namespaces, role: str, site: str = ""
    ) -> int:
        reg = ClientRegistration(client_id, tuple(namespaces), role, site)
        self._send({"type": "register", "registration": reg.as_dict()})
        doc = self._expect("registered", "error")
        if doc["type"] == "error":
            raise RegistrationError(doc.get("reason", ""))
        return doc["snapshot_count"]

    def publish(
        self,
        namespace: str,
        msg_type: str,
        payload: dict,
        *,
        emitter_id: str,
        sent_at: int,
        wait_ack: bool = True,
    ) -> RelayMessage:
        key = (namespace, emitter_id)
        seq = self._next_seq.get(key, 0) + 1
        self._next_seq[key] = seq
        msg = RelayMessage(namespace, emitter_id, msg_type, seq, sent_at, payload)
        self._send({"type": "publish", "message": msg.as_dict()})
        if wait_ack:
            doc = self._expect("ack", "fault", "error")
            if doc["type"] == "fault":
                raise SequenceFault(doc.get("reason", ""))
            if doc["type"] == "error":
                raise RelayError(doc.get("reason", ""))
        return msg

    def publish_raw(self, msg: RelayMessage, wait_ack: bool = True) -> Optional[dict]:
        """Publish a pre-built message without local seq bookkeeping."""
        self._send({"type": "publish", "message": msg.as_dict()})
        if wait_ack:
            return self._control.get(timeout=self.timeout)
        return None

    def inject_latency(self, namespace: str, delay: int, jitter: int = 0) -> None:
        self._send(
            {
                "type": "inject-latency",
                "namespace": namespace,
                "delay": delay,
                "jitter": jitter,
            }
        )
        self._expect("ok")

    def recv(self, timeout: Optional[float] = None) -> Optional[RelayMessage]:
        try:
            return self.deliveries.get(
                timeout=self.timeout if timeout is None else timeout
            )
        except queue.Empty:
            return None

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()
