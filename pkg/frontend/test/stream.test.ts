import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { LiveStream } from "../src/stream.js";
import { ControllerEvent } from "../src/types.js";
import { FakeEventSource } from "./fakes.js";

describe("LiveStream", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  function harness() {
    const sources: FakeEventSource[] = [];
    const seen: ControllerEvent[] = [];
    const states: string[] = [];
    const stream = new LiveStream(
      "http://svc",
      {
        onEvent: (e) => seen.push(e),
        onLive: () => states.push("live"),
        onDisconnected: () => states.push("disconnected"),
      },
      (url) => {
        const source = new FakeEventSource(url);
        sources.push(source);
        return source;
      },
    );
    return { stream, sources, seen, states };
  }

  it("reports live on open and dispatches parsed events", () => {
    const { stream, sources, seen, states } = harness();
    stream.open();
    sources[0]!.open();
    sources[0]!.emit({ seq: 0, name: "hitl.start", sessionId: "a" });
    expect(states).toEqual(["live"]);
    expect(seen).toHaveLength(1);
    expect(stream.lastSeq).toBe(0);
  });

  it("reconnects with backoff and resumes from the last sequence", () => {
    const { stream, sources, states } = harness();
    stream.open();
    sources[0]!.open();
    sources[0]!.emit({ seq: 7, name: "hitl.start", sessionId: "a" });
    sources[0]!.fail();
    expect(states).toEqual(["live", "disconnected"]);
    expect(sources).toHaveLength(1);
    vi.advanceTimersByTime(500); // first backoff step
    expect(sources).toHaveLength(2);
    expect(sources[1]!.url).toContain("since=7");
    sources[1]!.open();
    expect(states).toEqual(["live", "disconnected", "live"]);
  });

  it("backs off progressively on repeated failures", () => {
    const { stream, sources } = harness();
    stream.open();
    sources[0]!.fail();
    vi.advanceTimersByTime(500);
    expect(sources).toHaveLength(2);
    sources[1]!.fail();
    vi.advanceTimersByTime(500);
    expect(sources).toHaveLength(2); // second retry waits 1000ms
    vi.advanceTimersByTime(500);
    expect(sources).toHaveLength(3);
  });

  it("close() stops reconnecting", () => {
    const { stream, sources } = harness();
    stream.open();
    sources[0]!.fail();
    stream.close();
    vi.advanceTimersByTime(10_000);
    expect(sources).toHaveLength(1);
    expect(sources[0]!.closed).toBe(true);
  });

  it("ignores unparseable frames", () => {
    const { stream, sources, seen } = harness();
    stream.open();
    sources[0]!.open();
    sources[0]!.onmessage?.({ data: "{not json" });
    sources[0]!.emit({ seq: 1, name: "hitl.start", sessionId: "a" });
    expect(seen).toHaveLength(1);
    expect(stream.lastSeq).toBe(1);
  });
});
