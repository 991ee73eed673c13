import { describe, expect, it } from 'vitest';

import {
  ProtocolError,
  dragCommand,
  gestureCommand,
  graspCommand,
  parseServerMessage,
  releaseCommand,
  serializeCommand,
  setLatencyCommand,
} from '../src/protocol.js';

describe('parseServerMessage', () => {
  it('accepts a hello frame', () => {
    const msg = parseServerMessage(
      JSON.stringify({
        type: 'hello',
        scenario: 'tictactoe',
        tick_ms: 10,
        stride: 2,
        hand_speed: 0.3,
        latency_ms: 1500,
        sites: ['A', 'B'],
        workspace: { kind: 'tabletop', width: 0.9, depth: 0.9, anchors: {} },
        objects: [],
        proxies: [],
      }),
    );
    expect(msg.type).toBe('hello');
    if (msg.type === 'hello') {
      expect(msg.scenario).toBe('tictactoe');
      expect(msg.tick_ms).toBe(10);
    }
  });

  it('accepts state, ack, and error frames', () => {
    const state = parseServerMessage(
      JSON.stringify({ type: 'state', t: 120, state: { time_ms: 120 } }),
    );
    expect(state.type).toBe('state');

    const ack = parseServerMessage(JSON.stringify({ type: 'ack', seq: 7 }));
    expect(ack.type === 'ack' && ack.seq === 7).toBe(true);

    const err = parseServerMessage(
      JSON.stringify({ type: 'error', seq: null, reason: 'nope' }),
    );
    expect(err.type === 'error' && err.reason === 'nope').toBe(true);
  });

  it('rejects malformed frames', () => {
    expect(() => parseServerMessage('{not json')).toThrow(ProtocolError);
    expect(() => parseServerMessage('42')).toThrow(ProtocolError);
    expect(() => parseServerMessage('[1,2]')).toThrow(ProtocolError);
    expect(() => parseServerMessage('{"type":"mystery"}')).toThrow(ProtocolError);
    expect(() => parseServerMessage('{"type":"state"}')).toThrow(ProtocolError);
    expect(() => parseServerMessage('{"type":"ack"}')).toThrow(ProtocolError);
    expect(() => parseServerMessage('{"type":"error","seq":1}')).toThrow(
      ProtocolError,
    );
    expect(() => parseServerMessage('{"type":"hello"}')).toThrow(ProtocolError);
  });
});

describe('command builders', () => {
  it('wraps commands with a seq for the wire', () => {
    const doc = JSON.parse(serializeCommand(3, releaseCommand()));
    expect(doc).toEqual({ seq: 3, command: { kind: 'release', hand: 'ui-hand' } });
  });

  it('builds grasp and drag commands', () => {
    expect(graspCommand('stone', 'left', 'A')).toEqual({
      kind: 'grasp',
      object: 'stone',
      hand: 'left',
      site: 'A',
    });
    expect(dragCommand({ x: 0.4, y: 0.5 })).toEqual({
      kind: 'drag',
      pose: { x: 0.4, y: 0.5 },
      hand: 'ui-hand',
    });
  });

  it('builds a gesture command with everything the server validates', () => {
    const cmd = gestureCommand('push', { x: 0.45, y: 0.45 }, { x: 0.1, y: 0 });
    for (const key of ['gesture', 'wrist', 'motion', 'speed', 'duration_ms']) {
      expect(cmd).toHaveProperty(key);
    }
    expect(cmd['gesture']).toBe('push');
  });

  it('builds a set-latency command', () => {
    expect(setLatencyCommand(700)).toEqual({ kind: 'set-latency', value: 700 });
  });
});
