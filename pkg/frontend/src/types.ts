/** Wire types for the HITL control API and the console's derived view state. */

export type ConnectionState = "connecting" | "live" | "disconnected";

export interface SessionRow {
  id: string;
  state: string;
  approvalRequired: string[];
  stopReason: string | null;
}

export interface ApprovalRow {
  id: string;
  sessionId: string;
  actionType: string;
  payload: unknown;
  status: string;
}

export interface AuditRow {
  seq: number;
  ts: number;
  type: string;
  actor: string;
}

export interface ChainStatus {
  ok: boolean;
  count: number;
  brokenAt: number | null;
}

export interface ControllerEvent {
  seq: number;
  name: string;
  sessionId?: string;
  ts?: number;
  detail?: Record<string, unknown>;
}

export type SessionAction = "start" | "pause" | "resume" | "stop" | "complete" | "fail";

export interface ConsoleState {
  connection: ConnectionState;
  sessions: SessionRow[];
  approvals: ApprovalRow[]; // pending queue
  auditTail: AuditRow[];
  chain: ChainStatus | null;
  lastError: string | null;
  lastEventSeq: number;
}

export function initialState(): ConsoleState {
  return {
    connection: "connecting",
    sessions: [],
    approvals: [],
    auditTail: [],
    chain: null,
    lastError: null,
    lastEventSeq: -1,
  };
}
