import { describe, expect, it } from "vitest";

import { crc32OfStates } from "../src/gridstore.js";
import type { FrameMessage, HelloMessage } from "../src/protocol.js";
import { ViewState } from "../src/state.js";

const HELLO: HelloMessage = {
  type: "hello",
  version: 1,
  scenario: "t",
  tick_dt: 0.05,
  map: { width: 4, height: 4, resolution: 0.5, origin: [0, 0] },
};

function frame(tick: number, over: Partial<FrameMessage> = {}): FrameMessage {
  const cells = new Int8Array(16);
  return {
    type: "frame",
    tick,
    t: tick * 0.05,
    pose: [0.5 + tick * 0.01, 0.5, 0],
    mode: "TRACKING",
    command: [0.1, 0],
    errors: [0.01, -0.02, 0.001],
    min_range: 2.0,
    events: [],
    goal: [1.5, 1.5],
    plan_version: 1,
    grid: { keyframe: true, runs: [[0, 16, 0]], checksum: crc32OfStates(cells) },
    histogram: null,
    ref: [0.5, 0.5, 0],
    obstacles: [],
    paused: false,
    finished: false,
    metrics: { ticks: tick + 1, replans: 0, mode: "TRACKING" },
    ...over,
  };
}

describe("ViewState", () => {
  it("accumulates one trail point per frame", () => {
    const view = new ViewState();
    view.onHello(HELLO);
    for (let i = 0; i < 5; i++) view.onFrame(frame(i));
    expect(view.trail.length).toBe(5);
  });

  it("clears the trail when the server session restarts", () => {
    const view = new ViewState();
    view.onHello(HELLO);
    view.onFrame(frame(10));
    view.onFrame(frame(11));
    view.onFrame(frame(0)); // RESET on the server: tick goes backwards
    expect(view.trail.length).toBe(1);
  });

  it("keeps the plan from the last frame that carried one", () => {
    const view = new ViewState();
    view.onHello(HELLO);
    view.onFrame(frame(0, { plan: { xs: [0, 1], ys: [0, 1] } }));
    view.onFrame(frame(1)); // no plan field: cached plan stays
    expect(view.plan).not.toBeNull();
    expect(view.plan!.xs.length).toBe(2);
  });

  it("validates world bounds for tool clicks", () => {
    const view = new ViewState();
    view.onHello(HELLO);
    expect(view.inBounds(1.0, 1.0)).toBe(true);
    expect(view.inBounds(-0.1, 1.0)).toBe(false);
    expect(view.inBounds(1.0, 2.5)).toBe(false);
  });

  it("reports checksum failures from grid deltas", () => {
    const view = new ViewState();
    view.onHello(HELLO);
    expect(view.onFrame(frame(0))).toBe(true);
    const bad = frame(1, {
      grid: { keyframe: false, runs: [[3, 1, 1]], checksum: 999 },
    });
    expect(view.onFrame(bad)).toBe(false);
    expect(view.gridSynced).toBe(false);
  });
});
