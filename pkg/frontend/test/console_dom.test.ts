// @vitest-environment jsdom
/** Scripted operator session against the in-memory service double:
 * pause -> approval deny -> stop-all, each rendered within the 1 s target;
 * losing the stream shows the banner and disables every control. */

import { afterEach, describe, expect, it } from "vitest";

import { ConsoleController } from "../src/console.js";
import { renderConsole } from "../src/render.js";
import { FakeService, flush, until } from "./fakes.js";

function mountConsole(service: FakeService) {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const controller = new ConsoleController("http://svc.local", {
    fetchFn: service.fetchFn,
    eventSourceFactory: service.eventSourceFactory,
    auditPollMs: 60_000,
  });
  const handlers = { requestStopReason: () => "maintenance" };
  controller.store.subscribe((state) => renderConsole(root, state, controller, handlers));
  return { root, controller };
}

function badgeText(root: HTMLElement, sessionId: string): string {
  const row = root.querySelector(`tr[data-session-id="${sessionId}"]`);
  return row?.querySelector(".badge")?.textContent ?? "";
}

describe("operator console (scripted session)", () => {
  let cleanup: (() => void) | null = null;
  afterEach(() => {
    cleanup?.();
    document.body.textContent = "";
  });

  it("renders the session table from the initial snapshot", async () => {
    const service = new FakeService();
    service.addSession("agent-0");
    service.addSession("agent-1", "PAUSED");
    const { root, controller } = mountConsole(service);
    cleanup = () => controller.close();
    await controller.connect();
    await flush();
    expect(badgeText(root, "agent-0")).toBe("RUNNING");
    expect(badgeText(root, "agent-1")).toBe("PAUSED");
    expect(root.querySelector("#connection-banner")?.textContent).toContain("live");
  });

  it("pause, approval deny, and stop-all each render within 1 s", async () => {
    const service = new FakeService();
    service.addSession("agent-0");
    service.addSession("agent-1");
    service.addSession("agent-2");
    const { root, controller } = mountConsole(service);
    cleanup = () => controller.close();
    await controller.connect();
    await flush();

    // pause via the rendered button
    const pauseButton = root.querySelector(
      'tr[data-session-id="agent-0"] button.act-pause',
    ) as HTMLButtonElement;
    pauseButton.click();
    const pauseMs = await until(
      () => badgeText(root, "agent-0") === "PAUSED",
      1000,
      "pause rendered",
    );
    expect(pauseMs).toBeLessThan(1000);

    // a queued approval appears via the stream, deny makes the row disappear
    service.requestApproval("ap-1", "agent-1", "fs.write.irrev", { path: "/tmp/x" });
    await until(
      () => root.querySelector('tr[data-approval-id="ap-1"]') !== null,
      1000,
      "approval rendered",
    );
    const denyButton = root.querySelector(
      'tr[data-approval-id="ap-1"] button.act-deny',
    ) as HTMLButtonElement;
    denyButton.click();
    const denyMs = await until(
      () => root.querySelector('tr[data-approval-id="ap-1"]') === null,
      1000,
      "denied approval removed",
    );
    expect(denyMs).toBeLessThan(1000);
    expect(service.approvals.get("ap-1")?.status).toBe("denied");

    // stop-all halts every live session
    (root.querySelector("#stop-all") as HTMLButtonElement).click();
    const stopMs = await until(
      () =>
        ["agent-0", "agent-1", "agent-2"].every((id) => badgeText(root, id) === "STOPPED"),
      1000,
      "all sessions stopped",
    );
    expect(stopMs).toBeLessThan(1000);
    expect([...service.sessions.values()].every((s) => s.state === "STOPPED")).toBe(true);
    expect(
      root.querySelector('tr[data-session-id="agent-0"] .stop-reason')?.textContent,
    ).toContain("maintenance");
  });

  it("shows the disconnected banner and disables controls when the stream drops", async () => {
    const service = new FakeService();
    service.addSession("agent-0");
    const { root, controller } = mountConsole(service);
    cleanup = () => controller.close();
    await controller.connect();
    await flush();
    expect(
      (root.querySelector("button.act-pause") as HTMLButtonElement).disabled,
    ).toBe(false);

    service.sources[0]!.fail();
    await until(
      () => root.querySelector("#connection-banner")?.textContent?.includes("disconnected") ?? false,
      1000,
      "disconnect banner",
    );
    for (const button of root.querySelectorAll("button")) {
      expect((button as HTMLButtonElement).disabled).toBe(true);
    }
  });

  it("re-snapshots on reconnect and after a dropped-events marker", async () => {
    const service = new FakeService();
    service.addSession("agent-0");
    const { controller } = mountConsole(service);
    cleanup = () => controller.close();
    await controller.connect();
    await flush();
    const before = service.requests.filter((r) => r.path === "/sessions").length;

    // server-side mutation the stream never delivered
    service.sessions.get("agent-0")!.state = "PAUSED";
    service.sources[0]!.emit({ seq: 99, name: "hitl.stream.dropped", detail: { count: 5 } });
    await until(
      () => controller.store.current.sessions[0]?.state === "PAUSED",
      1000,
      "stale re-snapshot",
    );
    expect(service.requests.filter((r) => r.path === "/sessions").length).toBeGreaterThan(before);
  });

  it("renders inline 409 errors without blocking", async () => {
    const service = new FakeService();
    service.addSession("agent-0", "STOPPED");
    const { root, controller } = mountConsole(service);
    cleanup = () => controller.close();
    await controller.connect();
    await flush();
    const ok = await controller.operatorAction("resume", "agent-0");
    expect(ok).toBe(false);
    await flush();
    expect(root.querySelector("#inline-error")?.textContent).toContain("409");
  });

  it("shows the audit tail with the chain indicator", async () => {
    const service = new FakeService();
    service.addSession("agent-0");
    service.broadcast("hitl.start", "agent-0");
    const { root, controller } = mountConsole(service);
    cleanup = () => controller.close();
    await controller.connect();
    await flush();
    expect(root.querySelector("#chain-indicator")?.textContent).toContain("chain ok");
    expect(root.querySelectorAll(".audit-row").length).toBeGreaterThan(0);
  });
});
