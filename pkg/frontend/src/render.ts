/** DOM rendering: full re-render of the three panels from console state. */

import { ConsoleController } from "./console.js";
import { ApprovalRow, ConsoleState, SessionRow } from "./types.js";

const LIVE_ACTIONS: Record<string, string[]> = {
  PENDING: ["start"],
  RUNNING: ["pause", "stop", "complete", "fail"],
  PAUSED: ["resume", "stop", "complete", "fail"],
  STOPPED: [],
  COMPLETED: [],
  FAILED: [],
};

export interface RenderHandlers {
  /** asked before a stop is issued; return null to cancel */
  requestStopReason(sessionId: string): string | null;
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderSessionRow(
  row: SessionRow,
  live: boolean,
  controller: ConsoleController,
  handlers: RenderHandlers,
): HTMLElement {
  const tr = el("tr", `session-row state-${row.state.toLowerCase()}`);
  tr.dataset.sessionId = row.id;
  tr.appendChild(el("td", "session-id", row.id));
  const badge = el("td", "session-state");
  badge.appendChild(el("span", `badge badge-${row.state.toLowerCase()}`, row.state));
  tr.appendChild(badge);
  tr.appendChild(
    el("td", "session-gated", row.approvalRequired.join(", ") || "—"),
  );
  const actions = el("td", "session-actions");
  for (const action of LIVE_ACTIONS[row.state] ?? []) {
    const button = el("button", `act act-${action}`, action) as HTMLButtonElement;
    button.disabled = !live;
    button.addEventListener("click", () => {
      if (action === "stop") {
        const reason = handlers.requestStopReason(row.id);
        if (reason === null) return;
        void controller.operatorAction("stop", row.id, reason);
      } else {
        void controller.operatorAction(action as never, row.id);
      }
    });
    actions.appendChild(button);
  }
  if (row.state === "STOPPED" && row.stopReason) {
    actions.appendChild(el("span", "stop-reason", `reason: ${row.stopReason}`));
  }
  tr.appendChild(actions);
  return tr;
}

function renderApprovalRow(
  row: ApprovalRow,
  live: boolean,
  controller: ConsoleController,
): HTMLElement {
  const tr = el("tr", "approval-row");
  tr.dataset.approvalId = row.id;
  tr.appendChild(el("td", "approval-session", row.sessionId));
  tr.appendChild(el("td", "approval-action", row.actionType));
  tr.appendChild(el("td", "approval-payload", JSON.stringify(row.payload ?? null)));
  const actions = el("td", "approval-actions");
  for (const decision of ["allow", "deny"] as const) {
    const button = el("button", `act act-${decision}`, decision) as HTMLButtonElement;
    button.disabled = !live;
    button.addEventListener("click", () => void controller.resolveApproval(row.id, decision));
    actions.appendChild(button);
  }
  tr.appendChild(actions);
  return tr;
}

export function renderConsole(
  root: HTMLElement,
  state: ConsoleState,
  controller: ConsoleController,
  handlers: RenderHandlers,
): void {
  root.textContent = "";
  const live = state.connection === "live";

  const banner = el("div", `banner banner-${state.connection}`);
  banner.id = "connection-banner";
  banner.textContent =
    state.connection === "live"
      ? "● live"
      : state.connection === "connecting"
        ? "○ connecting…"
        : "✕ disconnected — controls disabled, retrying…";
  root.appendChild(banner);

  if (state.lastError) {
    const error = el("div", "inline-error", state.lastError);
    error.id = "inline-error";
    root.appendChild(error);
  }

  const sessionsPanel = el("section", "panel sessions-panel");
  sessionsPanel.appendChild(el("h2", "panel-title", `Sessions (${state.sessions.length})`));
  const stopAll = el("button", "act act-stop-all", "Stop All") as HTMLButtonElement;
  stopAll.id = "stop-all";
  stopAll.disabled = !live;
  stopAll.addEventListener("click", () => {
    const reason = handlers.requestStopReason("*");
    if (reason !== null) void controller.stopAll(reason);
  });
  sessionsPanel.appendChild(stopAll);
  const sessionTable = el("table", "session-table") as HTMLTableElement;
  sessionTable.id = "session-table";
  const sessionHead = el("tr", "head");
  for (const title of ["agent", "state", "gated actions", "controls"]) {
    sessionHead.appendChild(el("th", "", title));
  }
  sessionTable.appendChild(sessionHead);
  for (const row of state.sessions) {
    sessionTable.appendChild(renderSessionRow(row, live, controller, handlers));
  }
  sessionsPanel.appendChild(sessionTable);
  root.appendChild(sessionsPanel);

  const approvalsPanel = el("section", "panel approvals-panel");
  approvalsPanel.appendChild(el("h2", "panel-title", `Approvals (${state.approvals.length})`));
  const approvalTable = el("table", "approval-table") as HTMLTableElement;
  approvalTable.id = "approval-table";
  if (state.approvals.length === 0) {
    approvalsPanel.appendChild(el("div", "empty-msg", "no pending approvals"));
  }
  for (const row of state.approvals) {
    approvalTable.appendChild(renderApprovalRow(row, live, controller));
  }
  approvalsPanel.appendChild(approvalTable);
  root.appendChild(approvalsPanel);

  const auditPanel = el("section", "panel audit-panel");
  const chainText =
    state.chain === null
      ? "chain: n/a"
      : state.chain.ok
        ? `chain ok (${state.chain.count})`
        : `chain BROKEN at ${state.chain.brokenAt}`;
  auditPanel.appendChild(el("h2", "panel-title", "Audit tail"));
  const chainBadge = el(
    "span",
    `chain-indicator ${state.chain && !state.chain.ok ? "chain-broken" : "chain-ok"}`,
    chainText,
  );
  chainBadge.id = "chain-indicator";
  auditPanel.appendChild(chainBadge);
  const auditTable = el("table", "audit-table") as HTMLTableElement;
  auditTable.id = "audit-table";
  for (const record of [...state.auditTail].reverse()) {
    const tr = el("tr", "audit-row");
    tr.appendChild(el("td", "audit-ts", new Date(record.ts).toISOString().slice(11, 19)));
    tr.appendChild(el("td", "audit-type", record.type));
    tr.appendChild(el("td", "audit-actor", record.actor));
    auditTable.appendChild(tr);
  }
  auditPanel.appendChild(auditTable);
  root.appendChild(auditPanel);
}
