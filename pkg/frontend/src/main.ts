/** Browser entry: wire the controller to the document and render on change.
 *
 * The API base defaults to the page's own origin (the control service can
 * serve this bundle); override with ?api=http://127.0.0.1:8787.
 */

import { ConsoleController } from "./console.js";
import { renderConsole } from "./render.js";

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  if (override) return override.replace(/\/$/, "");
  return window.location.origin;
}

const root = document.getElementById("console-root");
if (!root) throw new Error("missing #console-root");

const controller = new ConsoleController(apiBase());
const handlers = {
  requestStopReason(sessionId: string): string | null {
    return window.prompt(
      sessionId === "*" ? "Stop ALL sessions — reason:" : `Stop ${sessionId} — reason:`,
      "operator stop",
    );
  },
};

controller.store.subscribe((state) => renderConsole(root, state, controller, handlers));
void controller.connect();
