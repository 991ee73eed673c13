/**
 * Message envelope for the stream-ui WebSocket.
 *
 * Server to client: hello / state / ack / error.
 * Client to server: { seq, command } wrappers around command documents.
 * Everything is JSON text frames; the server sorts keys but we accept any
 * key order on the way in.
 */

export interface Pose {
  x: number;
  y: number;
  heading?: number;
}

export interface WorkspaceInfo {
  kind: string;
  width: number;
  depth: number;
  anchors: Record<string, Pose>;
}

export interface HelloMessage {
  type: 'hello';
  scenario: string;
  tick_ms: number;
  stride: number;
  hand_speed: number;
  latency_ms: number;
  sites: string[];
  workspace: WorkspaceInfo;
  objects: Array<Record<string, unknown>>;
  proxies: Array<Record<string, unknown>>;
}

export interface ObjectState {
  pose: Pose;
  visual_kind: string;
  held_by: string | null;
}

export interface ProxyState {
  site: string;
  profile: string;
  pose: Pose;
  max_linear_speed: number;
  max_angular_speed: number;
  footprint_radius: number;
  state: string;
  carried: boolean;
}

export interface WorldSnapshot {
  time_ms: number;
  objects: Record<string, ObjectState>;
  proxies: Record<string, ProxyState>;
  hands: Record<string, Pose>;
  bindings: Record<string, Record<string, unknown>>;
  tasks: Record<string, Record<string, unknown>>;
  scenario: string;
}

export interface StateMessage {
  type: 'state';
  t: number;
  state: WorldSnapshot;
}

export interface AckMessage {
  type: 'ack';
  seq: number;
}

export interface ErrorMessage {
  type: 'error';
  seq: number | null;
  reason: string;
  command?: Record<string, unknown>;
}

export type ServerMessage = HelloMessage | StateMessage | AckMessage | ErrorMessage;

export type CommandKind = 'grasp' | 'drag' | 'release' | 'gesture' | 'set-latency';

export interface Command {
  kind: CommandKind;
  [field: string]: unknown;
}

export class ProtocolError extends Error {}

const SERVER_TYPES = new Set(['hello', 'state', 'ack', 'error']);

/** Parse one WebSocket text frame from the server; throws ProtocolError. */
export function parseServerMessage(data: string): ServerMessage {
  let doc: unknown;
  try {
    doc = JSON.parse(data);
  } catch {
    throw new ProtocolError('frame is not valid JSON');
  }
  if (typeof doc !== 'object' || doc === null || Array.isArray(doc)) {
    throw new ProtocolError('frame is not an object');
  }
  const msg = doc as Record<string, unknown>;
  const type = msg['type'];
  if (typeof type !== 'string' || !SERVER_TYPES.has(type)) {
    throw new ProtocolError(`unknown server message type: ${String(type)}`);
  }
  if (type === 'state' && (typeof msg['t'] !== 'number' || typeof msg['state'] !== 'object')) {
    throw new ProtocolError('state frame needs numeric t and a state object');
  }
  if (type === 'ack' && typeof msg['seq'] !== 'number') {
    throw new ProtocolError('ack frame needs a numeric seq');
  }
  if (type === 'error' && typeof msg['reason'] !== 'string') {
    throw new ProtocolError('error frame needs a reason');
  }
  if (type === 'hello' && typeof msg['scenario'] !== 'string') {
    throw new ProtocolError('hello frame needs a scenario');
  }
  return msg as unknown as ServerMessage;
}

/** Wrap a command for sending; seq lets the server ack or reject it. */
export function serializeCommand(seq: number, command: Command): string {
  return JSON.stringify({ seq, command });
}

// ---- command builders -------------------------------------------------------

export function graspCommand(object: string, hand = 'ui-hand', site?: string): Command {
  const cmd: Command = { kind: 'grasp', object, hand };
  if (site !== undefined) cmd['site'] = site;
  return cmd;
}

export function dragCommand(pose: Pose, hand = 'ui-hand'): Command {
  return { kind: 'drag', pose: { x: pose.x, y: pose.y }, hand };
}

export function releaseCommand(hand = 'ui-hand'): Command {
  return { kind: 'release', hand };
}

export function gestureCommand(
  gesture: 'push' | 'pull' | 'slide',
  wrist: Pose,
  motion: { x: number; y: number },
  opts: { speed?: number; durationMs?: number; hand?: string; site?: string } = {},
): Command {
  const cmd: Command = {
    kind: 'gesture',
    gesture,
    wrist: { x: wrist.x, y: wrist.y, heading: wrist.heading ?? 0 },
    motion,
    speed: opts.speed ?? 0.25,
    duration_ms: opts.durationMs ?? 400,
    hand: opts.hand ?? 'ui-hand',
  };
  if (opts.site !== undefined) cmd['site'] = opts.site;
  return cmd;
}

export function setLatencyCommand(valueMs: number): Command {
  return { kind: 'set-latency', value: valueMs };
}
