/** Thin typed client over the control API. fetch is injected for tests. */

import { ApprovalRow, AuditRow, ChainStatus, SessionAction, SessionRow } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  const body = await response.text();
  let parsed: unknown = null;
  try {
    parsed = body ? JSON.parse(body) : null;
  } catch {
    parsed = { error: body };
  }
  if (!response.ok) {
    const message =
      parsed && typeof parsed === "object" && "error" in parsed
        ? String((parsed as { error: unknown }).error)
        : `HTTP ${response.status}`;
    throw new ApiError(response.status, message);
  }
  return parsed as T;
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  listSessions(): Promise<SessionRow[]> {
    return this.get<SessionRow[]>("/sessions");
  }

  listPendingApprovals(): Promise<ApprovalRow[]> {
    return this.get<ApprovalRow[]>("/approvals?status=pending");
  }

  sessionAction(id: string, action: SessionAction, reason?: string): Promise<SessionRow> {
    return this.post<SessionRow>(
      `/sessions/${encodeURIComponent(id)}/${action}`,
      reason ? { reason } : {},
    );
  }

  resolveApproval(id: string, decision: "allow" | "deny"): Promise<ApprovalRow> {
    return this.post<ApprovalRow>(`/approvals/${encodeURIComponent(id)}`, { decision });
  }

  auditTail(n = 25): Promise<AuditRow[]> {
    return this.get<AuditRow[]>(`/audit/tail?n=${n}`);
  }

  auditVerify(): Promise<ChainStatus> {
    return this.get<ChainStatus>("/audit/verify");
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    return asJson<T>(response);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson<T>(response);
  }
}
