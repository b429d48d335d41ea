// WebSocket push-channel client: delivers change notifications, reconnects
// with backoff on channel loss, and asks for a full resync when a revision
// gap shows that notifications were missed.

import { ChangeNotification } from "./types.js";

export interface SocketLike {
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
  close(): void;
}

export type SocketFactory = () => SocketLike;

export interface SyncHandlers {
  onNotification(frame: ChangeNotification): void;
  onResyncNeeded(): void;
  onStatus?(status: "connecting" | "open" | "closed"): void;
  onOther?(frame: Record<string, unknown>): void;
}

export interface SyncOptions {
  initialBackoffMs?: number;
  maxBackoffMs?: number;
  schedule?: (fn: () => void, ms: number) => void;
}

export class LiveSync {
  private socket: SocketLike | null = null;
  private backoffMs: number;
  private stopped = false;
  readonly options: Required<Pick<SyncOptions, "initialBackoffMs" | "maxBackoffMs">>;
  private schedule: (fn: () => void, ms: number) => void;

  constructor(private factory: SocketFactory, private handlers: SyncHandlers,
              options: SyncOptions = {}) {
    this.options = {
      initialBackoffMs: options.initialBackoffMs ?? 500,
      maxBackoffMs: options.maxBackoffMs ?? 15000,
    };
    this.backoffMs = this.options.initialBackoffMs;
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
  }

  connect(): void {
    if (this.stopped) return;
    this.handlers.onStatus?.("connecting");
    const socket = this.factory();
    this.socket = socket;
    socket.onopen = () => {
      this.backoffMs = this.options.initialBackoffMs;
      this.handlers.onStatus?.("open");
    };
    socket.onmessage = (event) => this.handleFrame(event.data);
    socket.onclose = () => {
      this.handlers.onStatus?.("closed");
      if (this.stopped) return;
      const wait = this.backoffMs;
      this.backoffMs = Math.min(this.backoffMs * 2, this.options.maxBackoffMs);
      this.schedule(() => this.connect(), wait);
    };
  }

  handleFrame(data: string): void {
    let frame: Record<string, unknown>;
    try {
      frame = JSON.parse(data);
    } catch {
      return; // a malformed frame is dropped, the next one resynchronizes us
    }
    if (frame.type === "change") {
      this.handlers.onNotification(frame as unknown as ChangeNotification);
    } else {
      this.handlers.onOther?.(frame);
    }
  }

  currentBackoffMs(): number {
    return this.backoffMs;
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
  }
}
