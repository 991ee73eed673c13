/**
 * Browser entry point. Connects to a stream-ui server, draws the world,
 * and turns pointer input into grasp/drag/release commands. The server
 * URL comes from the `ws` query parameter:
 *
 *   index.html?ws=ws://127.0.0.1:8902
 */

import { SandboxClient, type SocketLike } from './client.js';
import {
  dragCommand,
  gestureCommand,
  graspCommand,
  releaseCommand,
  setLatencyCommand,
} from './protocol.js';
import { drawScene, screenToWorld, type Viewport } from './render.js';

const DEFAULT_URL = 'ws://127.0.0.1:8902';
const GRASP_RADIUS_M = 0.06;
const DRAG_SEND_MS = 20; // pointer-to-command throttle

const canvas = document.getElementById('scene') as HTMLCanvasElement;
const status = document.getElementById('status') as HTMLElement;
const latencyInput = document.getElementById('latency') as HTMLInputElement;
const latencyLabel = document.getElementById('latency-label') as HTMLElement;
const gestureButtons = document.querySelectorAll<HTMLButtonElement>('button[data-gesture]');

const ctx = canvas.getContext('2d')!;
const view: Viewport = {
  canvasWidth: canvas.width,
  canvasHeight: canvas.height,
  margin: 24,
};

function browserSocket(u: string): SocketLike {
  const ws = new WebSocket(u);
  const like: SocketLike = {
    send: (d) => ws.send(d),
    close: () => ws.close(),
    onopen: null,
    onmessage: null,
    onclose: null,
    onerror: null,
  };
  ws.onopen = () => like.onopen?.();
  ws.onmessage = (ev) => like.onmessage?.({ data: ev.data });
  ws.onclose = () => like.onclose?.();
  ws.onerror = () => like.onerror?.();
  return like;
}

const url = new URLSearchParams(location.search).get('ws') ?? DEFAULT_URL;
const client = new SandboxClient(url, browserSocket, {
  onOpen: () => setStatus(`connected to ${url}`),
  onClose: () => setStatus('disconnected'),
  onMessage: (msg) => {
    if (msg.type === 'error') setStatus(`rejected: ${msg.reason}`);
    if (msg.type === 'hello') {
      latencyInput.value = String(msg.latency_ms);
      latencyLabel.textContent = `${msg.latency_ms} ms`;
      setStatus(`scenario ${msg.scenario}`);
    }
  },
});
client.connect();

function setStatus(text: string): void {
  status.textContent = text;
}

// ---- pointer input ----------------------------------------------------------

let dragging: string | null = null;
let lastDragSent = 0;

function pointerWorld(ev: PointerEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  const hello = client.store.hello!;
  return screenToWorld(hello, view, ev.clientX - rect.left, ev.clientY - rect.top);
}

function nearestObject(x: number, y: number): string | null {
  const snap = client.store.snapshot;
  if (!snap) return null;
  let best: string | null = null;
  let bestD = GRASP_RADIUS_M;
  for (const [id, obj] of Object.entries(snap.objects)) {
    if (obj.held_by !== null) continue;
    const d = Math.hypot(obj.pose.x - x, obj.pose.y - y);
    if (d < bestD) {
      best = id;
      bestD = d;
    }
  }
  return best;
}

canvas.addEventListener('pointerdown', (ev) => {
  if (!client.store.hello) return;
  const [x, y] = pointerWorld(ev);
  const target = nearestObject(x, y);
  if (!target) return;
  dragging = target;
  canvas.setPointerCapture(ev.pointerId);
  client.send(graspCommand(target));
});

canvas.addEventListener('pointermove', (ev) => {
  if (!dragging || !client.store.hello) return;
  const now = performance.now();
  if (now - lastDragSent < DRAG_SEND_MS) return;
  lastDragSent = now;
  const [x, y] = pointerWorld(ev);
  client.send(dragCommand({ x, y }));
});

canvas.addEventListener('pointerup', () => {
  if (!dragging) return;
  dragging = null;
  client.send(releaseCommand());
});

// ---- controls ---------------------------------------------------------------

latencyInput.addEventListener('change', () => {
  const value = Number(latencyInput.value);
  latencyLabel.textContent = `${value} ms`;
  client.send(setLatencyCommand(value));
});

for (const button of gestureButtons) {
  button.addEventListener('click', () => {
    const kind = button.dataset.gesture as 'push' | 'pull' | 'slide';
    const snap = client.store.snapshot;
    const hello = client.store.hello;
    if (!snap || !hello) return;
    const cx = hello.workspace.width / 2;
    const cy = hello.workspace.depth / 2;
    const motion = kind === 'pull' ? { x: -0.12, y: 0 } : { x: 0.12, y: 0 };
    client.send(gestureCommand(kind, { x: cx, y: cy, heading: 0 }, motion));
  });
}

// ---- render loop --------------------------------------------------------------

function frame(): void {
  const hello = client.store.hello;
  if (hello) drawScene(ctx, view, hello, client.store);
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
