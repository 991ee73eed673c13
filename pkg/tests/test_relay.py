"""Relay semantics: registration, retention, per-emitter FIFO under jitter,
sequence faults, and the TCP transport on top of the same core."""

import random
import threading
import time

import pytest

from proxysim.relay import (
    ClientRegistration,
    InProcRelay,
    PublishError,
    RegistrationError,
    RelayCore,
    RelayMessage,
    SequenceFault,
)
from proxysim.relay_server import RelayClient, ServerThread


def _reg(cid, namespaces=("hands",), role="both", site=""):
    return ClientRegistration(cid, tuple(namespaces), role, site)


def _msg(ns, emitter, seq, msg_type="frame", sent_at=0, payload=None):
    return RelayMessage(ns, emitter, msg_type, seq, sent_at, payload or {})


# -- message / registration validation -----------------------------------------


def test_message_rejects_unknown_type_and_bad_seq():
    with pytest.raises(ValueError):
        _msg("hands", "a", 1, msg_type="telemetry")
    with pytest.raises(ValueError):
        _msg("hands", "a", 0)


def test_registration_rejects_unknown_role():
    with pytest.raises(ValueError):
        ClientRegistration("a", ("hands",), "observer")


def test_register_requires_namespace_and_unique_id():
    core = RelayCore()
    core.register(_reg("a"))
    with pytest.raises(RegistrationError):
        core.register(_reg("a"))
    with pytest.raises(RegistrationError):
        core.register(ClientRegistration("b", (), "both"))


# -- roles and fan-out ----------------------------------------------------------


def test_sink_cannot_publish_and_emitter_does_not_receive():
    core = RelayCore()
    core.register(_reg("site-a", role="sink"))
    core.register(_reg("glove", role="emitter"))
    with pytest.raises(PublishError):
        core.publish("site-a", _msg("hands", "site-a", 1), 0)
    # emitter-only client is never in the fan-out
    deliveries = core.publish("glove", _msg("hands", "glove", 1), 0)
    assert [d.client_id for d in deliveries] == ["site-a"]


def test_namespace_filtering():
    core = RelayCore()
    core.register(_reg("a", namespaces=("hands",)))
    core.register(_reg("b", namespaces=("props",)))
    core.register(_reg("c", namespaces=("hands", "props")))
    out = core.publish("a", _msg("hands", "a", 1), 0)
    assert [d.client_id for d in out] == ["c"]


def test_publish_outside_registered_namespace_rejected():
    core = RelayCore()
    core.register(_reg("a", namespaces=("hands",)))
    with pytest.raises(PublishError):
        core.publish("a", _msg("props", "a", 1), 0)


def test_echo_origin_off_by_default():
    core = RelayCore()
    core.register(_reg("a"))
    core.register(_reg("b"))
    out = core.publish("a", _msg("hands", "a", 1), 0)
    assert [d.client_id for d in out] == ["b"]

    echoing = RelayCore(echo_origin=True)
    echoing.register(_reg("a"))
    echoing.register(_reg("b"))
    out = echoing.publish("a", _msg("hands", "a", 1), 0)
    assert [d.client_id for d in out] == ["a", "b"]


# -- sequence discipline ---------------------------------------------------------


def test_sequence_gap_raises_fault():
    core = RelayCore()
    core.register(_reg("a"))
    core.register(_reg("b"))
    core.publish("a", _msg("hands", "a", 1), 0)
    with pytest.raises(SequenceFault):
        core.publish("a", _msg("hands", "a", 3), 0)
    # duplicate seq is also a fault
    with pytest.raises(SequenceFault):
        core.publish("a", _msg("hands", "a", 1), 0)


def test_sequences_are_per_namespace_and_emitter():
    core = RelayCore()
    core.register(_reg("a", namespaces=("hands", "props")))
    core.publish("a", _msg("hands", "a", 1), 0)
    core.publish("a", _msg("props", "a", 1), 0)  # independent counter
    core.publish("a", _msg("hands", "glove", 1), 0)  # emitter_id keys too


# -- retention -------------------------------------------------------------------


def test_late_joiner_gets_latest_per_key_sorted():
    relay = InProcRelay()
    a = relay.connect(_reg("a", namespaces=("hands", "props"), role="emitter"))
    a.publish("hands", "frame", {"x": 1})
    a.publish("hands", "frame", {"x": 2})
    a.publish("hands", "binding", {"pair": 1})
    a.publish("props", "frame", {"x": 3})
    relay.pump(10)

    late = relay.connect(_reg("late", namespaces=("hands", "props"), role="sink"))
    snap = [m for _, m in late.inbox]
    keys = [(m.namespace, m.emitter_id, m.msg_type) for m in snap]
    assert keys == sorted(keys)
    assert keys == [
        ("hands", "a", "binding"),
        ("hands", "a", "frame"),
        ("props", "a", "frame"),
    ]
    by_key = {k: m.payload for k, m in zip(keys, snap)}
    assert by_key[("hands", "a", "frame")] == {"x": 2}  # latest only


def test_retention_disabled_yields_empty_snapshot():
    relay = InProcRelay(retention=False)
    a = relay.connect(_reg("a", role="emitter"))
    a.publish("hands", "frame", {})
    relay.pump(10)
    late = relay.connect(_reg("late", role="sink"))
    assert late.inbox == []


def test_emitter_only_joiner_gets_no_snapshot():
    relay = InProcRelay()
    a = relay.connect(_reg("a", role="emitter"))
    a.publish("hands", "frame", {})
    relay.pump(10)
    b = relay.connect(_reg("b", role="emitter"))
    assert b.inbox == []


# -- latency injection and the virtual clock --------------------------------------


def test_injected_latency_delays_delivery():
    relay = InProcRelay()
    a = relay.connect(_reg("a", role="emitter"))
    b = relay.connect(_reg("b", role="sink"))
    relay.inject_latency("hands", 1500)
    relay.pump(100)
    a.publish("hands", "frame", {"x": 1})
    assert relay.pump(1599) == 0
    assert b.inbox == []
    assert relay.pump(1600) == 1
    due, msg = b.inbox[0]
    assert due == 1600.0
    assert msg.payload == {"x": 1}


def test_pump_rejects_backward_clock():
    relay = InProcRelay()
    relay.pump(100)
    with pytest.raises(ValueError):
        relay.pump(99)


def test_negative_latency_rejected():
    relay = InProcRelay()
    with pytest.raises(ValueError):
        relay.inject_latency("hands", -1)
    with pytest.raises(ValueError):
        relay.inject_latency("hands", 10, -1)


def test_jittered_due_never_precedes_publish_or_predecessor():
    core = RelayCore(jitter_seed=7)
    core.register(_reg("a", role="emitter"))
    core.register(_reg("b", role="sink"))
    core.inject_latency("hands", 20, 50)  # jitter window wider than the delay
    prev_due = 0.0
    for seq in range(1, 401):
        now = seq * 10
        (d,) = core.publish("a", _msg("hands", "a", seq, sent_at=now), now)
        assert d.due_ms >= now
        assert d.due_ms >= prev_due
        prev_due = d.due_ms


def test_fifo_preserved_under_jitter_across_emitters():
    # Interleave two emitters with heavy jitter; each emitter's messages
    # must still reach the sink in seq order, exactly once.
    rng = random.Random(1234)
    relay = InProcRelay(jitter_seed=99)
    left = relay.connect(_reg("left", role="emitter"))
    right = relay.connect(_reg("right", role="emitter"))
    sink = relay.connect(_reg("sink", role="sink"))
    relay.inject_latency("hands", 30, 80)

    sent = {"left": 0, "right": 0}
    now = 0
    for _ in range(600):
        now += rng.choice((0, 10, 10, 20))
        relay.pump(now)
        client = rng.choice((left, right))
        sent[client.client_id] += 1
        client.publish("hands", "frame", {"n": sent[client.client_id]})
    relay.pump(now + 10_000)

    got = {"left": [], "right": []}
    for _, msg in sink.inbox:
        got[msg.emitter_id].append(msg.seq)
    for name in ("left", "right"):
        assert got[name] == list(range(1, sent[name] + 1))
    assert relay.pending == 0


# -- TCP transport -----------------------------------------------------------------


def test_tcp_roundtrip_and_retained_snapshot():
    with ServerThread(host="127.0.0.1", port=0) as srv:
        a = RelayClient("127.0.0.1", srv.port)
        b = RelayClient("127.0.0.1", srv.port)
        try:
            assert a.register("a", ["hands"], "emitter") == 0
            assert b.register("b", ["hands"], "sink") == 0
            a.publish("hands", "frame", {"x": 0.5}, emitter_id="a", sent_at=0)
            msg = b.recv(timeout=2.0)
            assert msg is not None
            assert (msg.emitter_id, msg.seq, msg.payload) == ("a", 1, {"x": 0.5})

            late = RelayClient("127.0.0.1", srv.port)
            try:
                assert late.register("late", ["hands"], "sink") == 1
                snap = late.recv(timeout=2.0)
                assert snap is not None and snap.payload == {"x": 0.5}
            finally:
                late.close()
        finally:
            a.close()
            b.close()


def test_tcp_sequence_fault_reply():
    with ServerThread(host="127.0.0.1", port=0) as srv:
        a = RelayClient("127.0.0.1", srv.port)
        try:
            a.register("a", ["hands"], "emitter")
            a.publish("hands", "frame", {}, emitter_id="a", sent_at=0)
            reply = a.publish_raw(_msg("hands", "a", 5, sent_at=1))
            assert reply is not None and reply["type"] == "fault"
            assert "expected 2" in reply["reason"]
        finally:
            a.close()


def test_tcp_injected_latency_delays_wall_clock():
    with ServerThread(host="127.0.0.1", port=0) as srv:
        a = RelayClient("127.0.0.1", srv.port)
        b = RelayClient("127.0.0.1", srv.port)
        try:
            a.register("a", ["hands"], "emitter")
            b.register("b", ["hands"], "sink")
            a.inject_latency("hands", 300)
            t0 = time.monotonic()
            a.publish("hands", "frame", {}, emitter_id="a", sent_at=0)
            msg = b.recv(timeout=3.0)
            elapsed = time.monotonic() - t0
            assert msg is not None
            assert elapsed >= 0.25  # 300 ms injected, minus scheduling slop
        finally:
            a.close()
            b.close()


def test_tcp_two_emitters_fifo_exactly_once():
    n = 2000
    with ServerThread(host="127.0.0.1", port=0, jitter_seed=3) as srv:
        sink = RelayClient("127.0.0.1", srv.port)
        sink.register("sink", ["hands"], "sink")

        def feed(name):
            c = RelayClient("127.0.0.1", srv.port)
            c.register(name, ["hands"], "emitter")
            for i in range(n):
                c.publish(
                    "hands", "frame", {"i": i}, emitter_id=name, sent_at=i
                )
            c.close()

        threads = [
            threading.Thread(target=feed, args=(name,))
            for name in ("em-a", "em-b")
        ]
        for t in threads:
            t.start()
        got = {"em-a": [], "em-b": []}
        deadline = time.monotonic() + 60
        while sum(len(v) for v in got.values()) < 2 * n:
            msg = sink.recv(timeout=max(0.1, deadline - time.monotonic()))
            if msg is None:
                break
            got[msg.emitter_id].append(msg.seq)
        for t in threads:
            t.join(timeout=10)
        sink.close()
    for name in ("em-a", "em-b"):
        assert got[name] == list(range(1, n + 1))
