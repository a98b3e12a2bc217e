/** Console state container.
 *
 * View state is derived solely from control-API snapshots and the event
 * stream; nothing here invents state. Events already seen (replay overlap
 * after a reconnect) are deduplicated by sequence number.
 */

import {
  ApprovalRow,
  ConnectionState,
  ConsoleState,
  ControllerEvent,
  SessionRow,
  initialState,
} from "./types.js";

const EVENT_TO_STATE: Record<string, string> = {
  "hitl.start": "RUNNING",
  "hitl.pause": "PAUSED",
  "hitl.resume": "RUNNING",
  "hitl.stop": "STOPPED",
  "hitl.complete": "COMPLETED",
  "hitl.fail": "FAILED",
};

export type Listener = (state: ConsoleState) => void;

export class ConsoleStore {
  private state: ConsoleState = initialState();
  private listeners: Listener[] = [];
  /** set when the server reports dropped events: a re-snapshot is required */
  staleSignal = false;

  get current(): ConsoleState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  setConnection(connection: ConnectionState): void {
    this.state = { ...this.state, connection };
    this.notify();
  }

  setError(message: string | null): void {
    this.state = { ...this.state, lastError: message };
    this.notify();
  }

  applySnapshot(sessions: SessionRow[], approvals: ApprovalRow[]): void {
    this.state = {
      ...this.state,
      sessions: [...sessions].sort((a, b) => a.id.localeCompare(b.id)),
      approvals: approvals.filter((a) => a.status === "pending"),
    };
    this.staleSignal = false;
    this.notify();
  }

  applyAudit(tail: ConsoleState["auditTail"], chain: ConsoleState["chain"]): void {
    this.state = { ...this.state, auditTail: tail, chain };
    this.notify();
  }

  applyEvent(event: ControllerEvent): void {
    if (typeof event.seq === "number" && event.seq <= this.state.lastEventSeq) {
      return; // replay overlap
    }
    if (event.name === "hitl.stream.dropped") {
      this.staleSignal = true; // caller re-snapshots
      return;
    }
    const next: ConsoleState = {
      ...this.state,
      lastEventSeq: typeof event.seq === "number" ? event.seq : this.state.lastEventSeq,
    };
    const detail = event.detail ?? {};
    const sessionId = event.sessionId ?? "";

    if (event.name === "hitl.session.created") {
      const required = Array.isArray(detail.approvalRequired)
        ? (detail.approvalRequired as string[])
        : [];
      if (!next.sessions.some((s) => s.id === sessionId)) {
        next.sessions = [
          ...next.sessions,
          { id: sessionId, state: "PENDING", approvalRequired: required, stopReason: null },
        ].sort((a, b) => a.id.localeCompare(b.id));
      }
    } else if (event.name in EVENT_TO_STATE) {
      const to = EVENT_TO_STATE[event.name]!;
      next.sessions = next.sessions.map((row) =>
        row.id === sessionId
          ? {
              ...row,
              state: to,
              stopReason:
                event.name === "hitl.stop" ? String(detail.reason ?? "") : row.stopReason,
            }
          : row,
      );
    } else if (event.name === "hitl.approval.requested") {
      const approval: ApprovalRow = {
        id: String(detail.approvalId ?? ""),
        sessionId,
        actionType: String(detail.actionType ?? ""),
        payload: detail.payload,
        status: "pending",
      };
      if (!next.approvals.some((a) => a.id === approval.id)) {
        next.approvals = [...next.approvals, approval];
      }
    } else if (event.name === "hitl.approval.resolved" || event.name === "hitl.approval.voided") {
      const approvalId = String(detail.approvalId ?? "");
      next.approvals = next.approvals.filter((a) => a.id !== approvalId);
    }

    this.state = next;
    this.notify();
  }
}
