/** Test doubles: a scriptable control-API fetch and a hand-driven event source. */

import { EventSourceLike } from "../src/stream.js";
import { ApprovalRow, ControllerEvent, SessionRow } from "../src/types.js";

export class FakeEventSource implements EventSourceLike {
  onopen: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  closed = false;

  constructor(readonly url: string) {}

  open(): void {
    this.onopen?.();
  }

  emit(event: ControllerEvent): void {
    this.onmessage?.({ data: JSON.stringify(event) });
  }

  fail(): void {
    this.onerror?.();
  }

  close(): void {
    this.closed = true;
  }
}

/** In-memory control service good enough for the console contract. */
export class FakeService {
  sessions = new Map<string, SessionRow>();
  approvals = new Map<string, ApprovalRow>();
  audit: { seq: number; ts: number; type: string; actor: string }[] = [];
  chainOk = true;
  sources: FakeEventSource[] = [];
  private eventSeq = 0;
  readonly requests: { method: string; path: string; body: unknown }[] = [];

  eventSourceFactory = (url: string): FakeEventSource => {
    const source = new FakeEventSource(url);
    this.sources.push(source);
    queueMicrotask(() => source.open());
    return source;
  };

  addSession(id: string, state = "RUNNING", approvalRequired: string[] = []): void {
    this.sessions.set(id, { id, state, approvalRequired, stopReason: null });
  }

  broadcast(name: string, sessionId: string, detail: Record<string, unknown> = {}): void {
    const event: ControllerEvent = { seq: this.eventSeq++, name, sessionId, ts: Date.now(), detail };
    this.audit.push({ seq: this.audit.length, ts: event.ts!, type: name, actor: `session:${sessionId}` });
    for (const source of this.sources) source.emit(event);
  }

  transition(sessionId: string, action: string, reason = ""): SessionRow {
    const row = this.sessions.get(sessionId);
    if (!row) throw Object.assign(new Error("unknown session"), { status: 404 });
    const next: Record<string, string> = {
      start: "RUNNING",
      pause: "PAUSED",
      resume: "RUNNING",
      stop: "STOPPED",
      complete: "COMPLETED",
      fail: "FAILED",
    };
    const legal: Record<string, string[]> = {
      PENDING: ["start"],
      RUNNING: ["pause", "stop", "complete", "fail"],
      PAUSED: ["resume", "stop", "complete", "fail"],
      STOPPED: [],
      COMPLETED: [],
      FAILED: [],
    };
    if (!(legal[row.state] ?? []).includes(action)) {
      throw Object.assign(new Error(`illegal transition ${row.state} -> ${action}`), { status: 409 });
    }
    row.state = next[action]!;
    if (action === "stop") row.stopReason = reason;
    this.broadcast(`hitl.${action}`, sessionId, reason ? { reason } : {});
    return row;
  }

  requestApproval(id: string, sessionId: string, actionType: string, payload: unknown): void {
    this.approvals.set(id, { id, sessionId, actionType, payload, status: "pending" });
    this.broadcast("hitl.approval.requested", sessionId, { approvalId: id, actionType, payload });
  }

  fetchFn = async (input: string, init?: RequestInit): Promise<Response> => {
    const url = new URL(input);
    const method = (init?.method ?? "GET").toUpperCase();
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    this.requests.push({ method, path: url.pathname, body });
    const respond = (status: number, payload: unknown) =>
      new Response(JSON.stringify(payload), {
        status,
        headers: { "Content-Type": "application/json" },
      });
    try {
      if (method === "GET" && url.pathname === "/sessions") {
        return respond(200, [...this.sessions.values()]);
      }
      if (method === "GET" && url.pathname === "/approvals") {
        return respond(
          200,
          [...this.approvals.values()].filter((a) => a.status === "pending"),
        );
      }
      if (method === "POST" && url.pathname.startsWith("/sessions/")) {
        const [, , id, action] = url.pathname.split("/");
        return respond(200, this.transition(id!, action!, body?.reason ?? ""));
      }
      if (method === "POST" && url.pathname.startsWith("/approvals/")) {
        const id = url.pathname.split("/")[2]!;
        const row = this.approvals.get(id);
        if (!row) return respond(404, { error: "unknown approval" });
        if (row.status !== "pending") return respond(409, { error: "already resolved" });
        row.status = body.decision === "allow" ? "allowed" : "denied";
        this.broadcast("hitl.approval.resolved", row.sessionId, {
          approvalId: id,
          decision: body.decision,
        });
        return respond(200, row);
      }
      if (method === "GET" && url.pathname === "/audit/tail") {
        const n = Number(url.searchParams.get("n") ?? "20");
        return respond(200, this.audit.slice(-n));
      }
      if (method === "GET" && url.pathname === "/audit/verify") {
        return respond(200, { ok: this.chainOk, count: this.audit.length, brokenAt: null });
      }
      return respond(404, { error: `no route ${method} ${url.pathname}` });
    } catch (error) {
      const status = (error as { status?: number }).status ?? 500;
      return respond(status, { error: (error as Error).message });
    }
  };
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

export async function until(
  predicate: () => boolean,
  timeoutMs = 2000,
  what = "condition",
): Promise<number> {
  const start = Date.now();
  while (!predicate()) {
    if (Date.now() - start > timeoutMs) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 5));
  }
  return Date.now() - start;
}
