/**
 * Top-down scene drawing. Works against a minimal slice of the canvas 2D
 * API so tests can pass a recording fake; main.ts passes a real
 * CanvasRenderingContext2D, which satisfies Draw2D structurally.
 */

import type { HelloMessage } from './protocol.js';
import type { SandboxStore } from './state.js';

export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface Viewport {
  canvasWidth: number;
  canvasHeight: number;
  margin: number;
}

const TABLE_FILL = '#20262e';
const GRID_STROKE = '#3a4350';
const OBJECT_FILL = '#e8c36a';
const HELD_FILL = '#f4e3b2';
const PROXY_FILL = '#5fa8d3';
const BUSY_FILL = '#d35f5f';
const HAND_STROKE = '#9ce05f';
const TRAIL_STROKE = '#31506a';

/** Meters-to-pixels scale that fits the workspace inside the viewport. */
export function worldScale(hello: HelloMessage, view: Viewport): number {
  const w = view.canvasWidth - 2 * view.margin;
  const h = view.canvasHeight - 2 * view.margin;
  return Math.min(w / hello.workspace.width, h / hello.workspace.depth);
}

/** Workspace meters to canvas pixels; y stays screen-down. */
export function worldToScreen(
  hello: HelloMessage, view: Viewport, x: number, y: number,
): [number, number] {
  const s = worldScale(hello, view);
  return [view.margin + x * s, view.margin + y * s];
}

/** Canvas pixels back to workspace meters (for pointer events). */
export function screenToWorld(
  hello: HelloMessage, view: Viewport, px: number, py: number,
): [number, number] {
  const s = worldScale(hello, view);
  return [(px - view.margin) / s, (py - view.margin) / s];
}

export function drawScene(
  ctx: Draw2D, view: Viewport, hello: HelloMessage, store: SandboxStore,
): void {
  ctx.clearRect(0, 0, view.canvasWidth, view.canvasHeight);
  const s = worldScale(hello, view);
  const [ox, oy] = worldToScreen(hello, view, 0, 0);

  ctx.fillStyle = TABLE_FILL;
  ctx.fillRect(ox, oy, hello.workspace.width * s, hello.workspace.depth * s);

  ctx.strokeStyle = GRID_STROKE;
  ctx.lineWidth = 1;
  for (const pose of Object.values(hello.workspace.anchors)) {
    const [ax, ay] = worldToScreen(hello, view, pose.x, pose.y);
    ctx.strokeRect(ax - 4, ay - 4, 8, 8);
  }

  const snap = store.snapshot;
  if (!snap) return;

  for (const [id, trail] of store.trails) {
    if (trail.length < 2 || !(id in snap.proxies)) continue;
    ctx.strokeStyle = TRAIL_STROKE;
    ctx.beginPath();
    const [tx, ty] = worldToScreen(hello, view, trail[0].x, trail[0].y);
    ctx.moveTo(tx, ty);
    for (const p of trail.slice(1)) {
      const [lx, ly] = worldToScreen(hello, view, p.x, p.y);
      ctx.lineTo(lx, ly);
    }
    ctx.stroke();
  }

  const busy = new Set(store.busyProxies());
  for (const [id, proxy] of Object.entries(snap.proxies)) {
    const [px, py] = worldToScreen(hello, view, proxy.pose.x, proxy.pose.y);
    const r = Math.max(4, proxy.footprint_radius * s);
    ctx.fillStyle = busy.has(id) ? BUSY_FILL : PROXY_FILL;
    ctx.beginPath();
    ctx.arc(px, py, r, 0, 2 * Math.PI);
    ctx.fill();
    const heading = proxy.pose.heading ?? 0;
    ctx.strokeStyle = '#ffffff';
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(px + Math.cos(heading) * r, py + Math.sin(heading) * r);
    ctx.stroke();
    ctx.fillStyle = '#c9d4e0';
    ctx.fillText(id, px + r + 2, py - r - 2);
  }

  for (const [id, obj] of Object.entries(snap.objects)) {
    const [px, py] = worldToScreen(hello, view, obj.pose.x, obj.pose.y);
    ctx.fillStyle = obj.held_by !== null ? HELD_FILL : OBJECT_FILL;
    ctx.fillRect(px - 6, py - 6, 12, 12);
    ctx.fillStyle = '#c9d4e0';
    ctx.fillText(id, px + 8, py - 8);
  }

  for (const pose of Object.values(snap.hands)) {
    const [px, py] = worldToScreen(hello, view, pose.x, pose.y);
    ctx.strokeStyle = HAND_STROKE;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px - 6, py);
    ctx.lineTo(px + 6, py);
    ctx.moveTo(px, py - 6);
    ctx.lineTo(px, py + 6);
    ctx.stroke();
  }
}
