/**
 * Client-side session store: the last hello, the latest world snapshot,
 * pending command acks, recent errors, and short motion trails for
 * rendering. Pure data; no sockets, no DOM.
 */

import type {
  Command,
  HelloMessage,
  ServerMessage,
  WorldSnapshot,
} from './protocol.js';

const TRAIL_LENGTH = 40;

export interface PendingCommand {
  seq: number;
  command: Command;
  sentAt: number; // wall-clock ms, informational only
}

export interface CommandFault {
  seq: number | null;
  reason: string;
}

export class SandboxStore {
  hello: HelloMessage | null = null;
  snapshot: WorldSnapshot | null = null;
  framesSeen = 0;
  latencyMs = 0;
  pending: Map<number, PendingCommand> = new Map();
  faults: CommandFault[] = [];
  trails: Map<string, Array<{ x: number; y: number }>> = new Map();

  private nextSeq = 1;

  /** Reserve a seq number and remember the command until ack/error. */
  track(command: Command, now = Date.now()): number {
    const seq = this.nextSeq++;
    this.pending.set(seq, { seq, command, sentAt: now });
    return seq;
  }

  handle(msg: ServerMessage): void {
    switch (msg.type) {
      case 'hello':
        this.hello = msg;
        this.latencyMs = msg.latency_ms;
        this.trails.clear();
        break;
      case 'state':
        this.snapshot = msg.state;
        this.framesSeen += 1;
        this.extendTrails(msg.state);
        break;
      case 'ack': {
        const entry = this.pending.get(msg.seq);
        this.pending.delete(msg.seq);
        if (entry && entry.command.kind === 'set-latency') {
          this.latencyMs = Number(entry.command['value']);
        }
        break;
      }
      case 'error':
        if (msg.seq !== null) this.pending.delete(msg.seq);
        this.faults.push({ seq: msg.seq, reason: msg.reason });
        break;
    }
  }

  /** Object ids currently held by any hand. */
  heldObjects(): string[] {
    if (!this.snapshot) return [];
    return Object.entries(this.snapshot.objects)
      .filter(([, obj]) => obj.held_by !== null)
      .map(([id]) => id)
      .sort();
  }

  /** Proxies with an open retargeting task (still catching up). */
  busyProxies(): string[] {
    if (!this.snapshot) return [];
    const busy = new Set<string>();
    for (const task of Object.values(this.snapshot.tasks)) {
      const pid = task['proxy_id'];
      if (typeof pid === 'string') busy.add(pid);
    }
    return [...busy].sort();
  }

  private extendTrails(state: WorldSnapshot): void {
    for (const [id, proxy] of Object.entries(state.proxies)) {
      let trail = this.trails.get(id);
      if (!trail) {
        trail = [];
        this.trails.set(id, trail);
      }
      const last = trail[trail.length - 1];
      if (!last || last.x !== proxy.pose.x || last.y !== proxy.pose.y) {
        trail.push({ x: proxy.pose.x, y: proxy.pose.y });
        if (trail.length > TRAIL_LENGTH) trail.shift();
      }
    }
  }
}
