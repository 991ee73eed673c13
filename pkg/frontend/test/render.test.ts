import { describe, expect, it } from 'vitest';

import type { HelloMessage, WorldSnapshot } from '../src/protocol.js';
import {
  drawScene,
  screenToWorld,
  worldScale,
  worldToScreen,
  type Draw2D,
  type Viewport,
} from '../src/render.js';
import { SandboxStore } from '../src/state.js';

/** Records every call so assertions can inspect what would be drawn. */
class RecordingCtx implements Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern = '';
  strokeStyle: string | CanvasGradient | CanvasPattern = '';
  lineWidth = 0;
  font = '';
  calls: Array<[string, ...unknown[]]> = [];

  clearRect(...a: number[]) { this.calls.push(['clearRect', ...a]); }
  fillRect(...a: number[]) { this.calls.push(['fillRect', ...a]); }
  strokeRect(...a: number[]) { this.calls.push(['strokeRect', ...a]); }
  beginPath() { this.calls.push(['beginPath']); }
  moveTo(...a: number[]) { this.calls.push(['moveTo', ...a]); }
  lineTo(...a: number[]) { this.calls.push(['lineTo', ...a]); }
  arc(...a: number[]) { this.calls.push(['arc', ...a]); }
  fill() { this.calls.push(['fill']); }
  stroke() { this.calls.push(['stroke']); }
  fillText(text: string, x: number, y: number) {
    this.calls.push(['fillText', text, x, y]);
  }

  count(name: string): number {
    return this.calls.filter(([n]) => n === name).length;
  }
}

const view: Viewport = { canvasWidth: 640, canvasHeight: 640, margin: 24 };

function hello(): HelloMessage {
  return {
    type: 'hello',
    scenario: 'sandbox',
    tick_ms: 10,
    stride: 2,
    hand_speed: 0.3,
    latency_ms: 1500,
    sites: ['A'],
    workspace: {
      kind: 'tabletop',
      width: 0.9,
      depth: 0.9,
      anchors: { 'tile-5': { x: 0.45, y: 0.45 } },
    },
    objects: [],
    proxies: [],
  };
}

function snapshot(): WorldSnapshot {
  return {
    time_ms: 100,
    objects: {
      stone: {
        pose: { x: 0.2, y: 0.3, heading: 0 },
        visual_kind: 'stone',
        held_by: null,
      },
    },
    proxies: {
      p1: {
        site: 'A',
        profile: 'tabletop',
        pose: { x: 0.6, y: 0.6, heading: 1.2 },
        max_linear_speed: 0.25,
        max_angular_speed: Math.PI,
        footprint_radius: 0.05,
        state: 'engaged',
        carried: false,
      },
      p2: {
        site: 'A',
        profile: 'tabletop',
        pose: { x: 0.8, y: 0.2, heading: 0 },
        max_linear_speed: 0.25,
        max_angular_speed: Math.PI,
        footprint_radius: 0.05,
        state: 'idle',
        carried: false,
      },
    },
    hands: { wrist: { x: 0.1, y: 0.1, heading: 0 } },
    bindings: {},
    tasks: {},
    scenario: 'sandbox',
  };
}

describe('coordinate mapping', () => {
  it('fits the workspace into the viewport', () => {
    const s = worldScale(hello(), view);
    expect(s).toBeCloseTo((640 - 48) / 0.9, 10);
  });

  it('round-trips world to screen and back', () => {
    const h = hello();
    const [px, py] = worldToScreen(h, view, 0.45, 0.3);
    const [wx, wy] = screenToWorld(h, view, px, py);
    expect(wx).toBeCloseTo(0.45, 12);
    expect(wy).toBeCloseTo(0.3, 12);
  });

  it('maps the origin to the viewport margin', () => {
    expect(worldToScreen(hello(), view, 0, 0)).toEqual([24, 24]);
  });
});

describe('drawScene', () => {
  it('draws the table, anchors, proxies, objects, and hands', () => {
    const ctx = new RecordingCtx();
    const store = new SandboxStore();
    store.handle({ type: 'state', t: 100, state: snapshot() });

    drawScene(ctx, view, hello(), store);

    expect(ctx.count('clearRect')).toBe(1);
    expect(ctx.count('arc')).toBe(2); // one disc per proxy
    expect(ctx.count('strokeRect')).toBe(1); // the single anchor
    // table + object squares
    expect(ctx.count('fillRect')).toBe(2);
    // labels: two proxies + one object
    expect(ctx.count('fillText')).toBe(3);
  });

  it('only draws the static scene before the first state frame', () => {
    const ctx = new RecordingCtx();
    drawScene(ctx, view, hello(), new SandboxStore());
    expect(ctx.count('arc')).toBe(0);
    expect(ctx.count('fillRect')).toBe(1); // just the table
  });
});
