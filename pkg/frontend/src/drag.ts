/**
 * Pointer-path resampling, mirrored operation for operation from the
 * simulator's implementation so both sides produce bit-identical frames
 * for the same input (the test suite checks this against recorded
 * fixtures). Keep formulas and evaluation order in sync; in particular
 * distances stay sqrt(dx*dx + dy*dy), and a sample that lands exactly on
 * a segment endpoint returns that endpoint with no interpolation residue.
 */

export interface DragPoint {
  x: number;
  y: number;
  t: number; // milliseconds, non-decreasing
}

export interface WristFrame {
  t: number;
  x: number;
  y: number;
}

export interface WorkspaceRect {
  width: number;
  depth: number;
}

export class DragPathError extends Error {}

function dist(ax: number, ay: number, bx: number, by: number): number {
  const dx = bx - ax;
  const dy = by - ay;
  return Math.sqrt(dx * dx + dy * dy);
}

function clamp(x: number, y: number, ws: WorkspaceRect | null): [number, number] {
  if (ws === null) return [x, y];
  return [Math.min(Math.max(x, 0), ws.width), Math.min(Math.max(y, 0), ws.depth)];
}

/** Move from (x,y) toward the target by at most step; snap when close. */
function advance(
  x: number, y: number, tx: number, ty: number, step: number,
): [number, number] {
  const d = dist(x, y, tx, ty);
  if (d <= step || d === 0) return [tx, ty];
  const f = step / d;
  return [x + (tx - x) * f, y + (ty - y) * f];
}

function interp(pts: DragPoint[], t: number): [number, number] {
  if (t <= pts[0].t) return [pts[0].x, pts[0].y];
  for (let i = 0; i + 1 < pts.length; i++) {
    const a = pts[i];
    const b = pts[i + 1];
    if (t <= b.t) {
      if (t === b.t) return [b.x, b.y];
      const span = b.t - a.t;
      const f = span <= 0 ? 0 : (t - a.t) / span;
      return [a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f];
    }
  }
  const last = pts[pts.length - 1];
  return [last.x, last.y];
}

export interface ResampleOptions {
  handSpeed: number; // m/s
  tickMs?: number;
  workspace?: WorkspaceRect | null;
  startMs?: number;
}

/**
 * Convert a recorded pointer path into fixed-rate wrist frames on the
 * tick grid, never moving faster than handSpeed. Out-of-bounds samples
 * are clamped to the workspace edge before the speed limit applies.
 */
export function resampleDrag(points: DragPoint[], opts: ResampleOptions): WristFrame[] {
  if (points.length === 0) throw new DragPathError('drag path is empty');
  for (let i = 0; i + 1 < points.length; i++) {
    if (points[i + 1].t < points[i].t) {
      throw new DragPathError('drag path timestamps must be non-decreasing');
    }
  }
  const tickMs = opts.tickMs ?? 10;
  const ws = opts.workspace ?? null;
  const startMs = opts.startMs ?? 0;

  const duration = points[points.length - 1].t - points[0].t;
  const step = (opts.handSpeed * tickMs) / 1000.0;
  let [px, py] = clamp(points[0].x, points[0].y, ws);
  const frames: WristFrame[] = [];
  let k = 0;
  for (;;) {
    k += 1;
    const rel = k * tickMs;
    const at = interp(points, points[0].t + Math.min(rel, duration));
    const [tx, ty] = clamp(at[0], at[1], ws);
    [px, py] = advance(px, py, tx, ty, step);
    frames.push({ t: startMs + rel, x: px, y: py });
    if (rel >= duration && dist(px, py, tx, ty) <= 1e-12) return frames;
  }
}
