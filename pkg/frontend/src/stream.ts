/** Event-stream subscription with reconnect/backoff and replay resume.
 *
 * The server replays history then follows; on reconnect we resume from the
 * last seen sequence number (?since=) and the owner re-snapshots, so a gap
 * can never be silently skipped.
 */

import { ControllerEvent } from "./types.js";

export interface EventSourceLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface StreamCallbacks {
  onEvent(event: ControllerEvent): void;
  onLive(): void;
  onDisconnected(): void;
}

const BACKOFF_MS = [500, 1000, 2000, 5000];

export class LiveStream {
  private source: EventSourceLike | null = null;
  private attempts = 0;
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  lastSeq = -1;

  constructor(
    private readonly baseUrl: string,
    private readonly callbacks: StreamCallbacks,
    private readonly factory: EventSourceFactory,
  ) {}

  open(): void {
    if (this.closed) return;
    const url = `${this.baseUrl}/events?since=${this.lastSeq}`;
    const source = this.factory(url);
    this.source = source;
    source.onopen = () => {
      this.attempts = 0;
      this.callbacks.onLive();
    };
    source.onmessage = (message) => {
      let event: ControllerEvent;
      try {
        event = JSON.parse(message.data) as ControllerEvent;
      } catch {
        return;
      }
      if (typeof event.seq === "number" && event.seq > this.lastSeq) {
        this.lastSeq = event.seq;
      }
      this.callbacks.onEvent(event);
    };
    source.onerror = () => {
      source.close();
      if (this.source !== source || this.closed) return;
      this.source = null;
      this.callbacks.onDisconnected();
      const delay = BACKOFF_MS[Math.min(this.attempts, BACKOFF_MS.length - 1)]!;
      this.attempts += 1;
      this.reconnectTimer = setTimeout(() => this.open(), delay);
    };
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.source?.close();
    this.source = null;
  }
}
