/** Orchestration: snapshot + live stream into the store, operator actions out.
 *
 * connect() takes an initial snapshot over the GET endpoints and then applies
 * incremental updates from the event stream; every reconnect re-snapshots.
 * Operator actions go through the documented POST endpoints only — errors
 * (409 on an illegal transition, 404 on a stale id) surface inline on the
 * store and never block the stream.
 */

import { ApiClient, ApiError, FetchLike } from "./api.js";
import { ConsoleStore } from "./store.js";
import { EventSourceFactory, LiveStream } from "./stream.js";
import { SessionAction } from "./types.js";

export interface ConsoleOptions {
  fetchFn?: FetchLike;
  eventSourceFactory?: EventSourceFactory;
  auditPollMs?: number;
  auditTailLength?: number;
}

export class ConsoleController {
  readonly store = new ConsoleStore();
  readonly api: ApiClient;
  private stream: LiveStream | null = null;
  private auditTimer: ReturnType<typeof setInterval> | null = null;
  private readonly auditPollMs: number;
  private readonly auditTailLength: number;
  private readonly eventSourceFactory: EventSourceFactory;

  constructor(
    readonly baseUrl: string,
    options: ConsoleOptions = {},
  ) {
    this.api = new ApiClient(baseUrl, options.fetchFn);
    this.eventSourceFactory =
      options.eventSourceFactory ??
      ((url: string) => new EventSource(url) as unknown as ReturnType<EventSourceFactory>);
    this.auditPollMs = options.auditPollMs ?? 4000;
    this.auditTailLength = options.auditTailLength ?? 25;
  }

  async connect(): Promise<void> {
    this.store.setConnection("connecting");
    this.stream = new LiveStream(
      this.baseUrl,
      {
        onEvent: (event) => {
          this.store.applyEvent(event);
          if (this.store.staleSignal) void this.snapshot();
        },
        onLive: () => {
          this.store.setConnection("live");
          void this.snapshot();
        },
        onDisconnected: () => this.store.setConnection("disconnected"),
      },
      this.eventSourceFactory,
    );
    this.stream.open();
    await this.snapshot();
    this.auditTimer = setInterval(() => void this.refreshAudit(), this.auditPollMs);
  }

  async snapshot(): Promise<void> {
    try {
      const [sessions, approvals] = await Promise.all([
        this.api.listSessions(),
        this.api.listPendingApprovals(),
      ]);
      this.store.applySnapshot(sessions, approvals);
      await this.refreshAudit();
    } catch {
      this.store.setConnection("disconnected");
    }
  }

  async refreshAudit(): Promise<void> {
    try {
      const [tail, chain] = await Promise.all([
        this.api.auditTail(this.auditTailLength),
        this.api.auditVerify(),
      ]);
      this.store.applyAudit(tail, chain);
    } catch {
      // audit display is best-effort; the stream drives liveness
    }
  }

  /** Issue a session control; API errors render inline and are non-blocking. */
  async operatorAction(action: SessionAction, sessionId: string, reason?: string): Promise<boolean> {
    try {
      await this.api.sessionAction(sessionId, action, reason);
      this.store.setError(null);
      return true;
    } catch (error) {
      this.store.setError(this.describe(error, `${action} ${sessionId}`));
      return false;
    }
  }

  async resolveApproval(approvalId: string, decision: "allow" | "deny"): Promise<boolean> {
    try {
      await this.api.resolveApproval(approvalId, decision);
      this.store.setError(null);
      return true;
    } catch (error) {
      this.store.setError(this.describe(error, `${decision} ${approvalId}`));
      return false;
    }
  }

  /** Stop every RUNNING or PAUSED session through the per-session endpoint. */
  async stopAll(reason: string): Promise<number> {
    let stopped = 0;
    for (const row of this.store.current.sessions) {
      if (row.state === "RUNNING" || row.state === "PAUSED") {
        if (await this.operatorAction("stop", row.id, reason)) stopped += 1;
      }
    }
    return stopped;
  }

  private describe(error: unknown, context: string): string {
    if (error instanceof ApiError) return `${context}: ${error.status} ${error.message}`;
    return `${context}: ${String(error)}`;
  }

  close(): void {
    if (this.auditTimer !== null) clearInterval(this.auditTimer);
    this.stream?.close();
  }
}
