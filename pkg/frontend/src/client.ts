/**
 * WebSocket wiring between the store and a stream-ui server. The socket
 * is injected as a factory so tests (and node's `ws` package) can supply
 * their own implementation; a browser passes `(url) => new WebSocket(url)`.
 */

import type { Command, ServerMessage } from './protocol.js';
import { parseServerMessage, serializeCommand } from './protocol.js';
import { SandboxStore } from './state.js';

/** The subset of the browser WebSocket API the client relies on. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientHooks {
  onMessage?: (msg: ServerMessage) => void;
  onOpen?: () => void;
  onClose?: () => void;
  onProtocolError?: (err: Error) => void;
}

export class SandboxClient {
  readonly store = new SandboxStore();
  private socket: SocketLike | null = null;
  private open = false;
  private backlog: string[] = [];

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory,
    private readonly hooks: ClientHooks = {},
  ) {}

  connect(): void {
    const sock = this.factory(this.url);
    this.socket = sock;
    sock.onopen = () => {
      this.open = true;
      for (const data of this.backlog.splice(0)) sock.send(data);
      this.hooks.onOpen?.();
    };
    sock.onmessage = (ev) => {
      let msg: ServerMessage;
      try {
        msg = parseServerMessage(String(ev.data));
      } catch (err) {
        this.hooks.onProtocolError?.(err as Error);
        return;
      }
      this.store.handle(msg);
      this.hooks.onMessage?.(msg);
    };
    sock.onclose = () => {
      this.open = false;
      this.hooks.onClose?.();
    };
    sock.onerror = () => {
      /* onclose follows; nothing to do here */
    };
  }

  get connected(): boolean {
    return this.open;
  }

  /** Send a command; returns its seq. Queued if the socket isn't open yet. */
  send(command: Command): number {
    const seq = this.store.track(command);
    const data = serializeCommand(seq, command);
    if (this.open && this.socket) {
      this.socket.send(data);
    } else {
      this.backlog.push(data);
    }
    return seq;
  }

  close(): void {
    this.socket?.close();
    this.open = false;
  }
}
