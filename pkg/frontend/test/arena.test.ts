import { describe, expect, it } from "vitest";

import { ArenaView } from "../src/arena.js";
import { RecordingContext, layout, snapshot } from "./helpers.js";

describe("coordinate mapping", () => {
  const arena = new ArenaView(layout, 600, 400);

  it("pixel and world transforms invert each other", () => {
    const [px, py] = arena.toPixels(2.5, 1.25);
    const [wx, wy] = arena.toWorld(px, py);
    expect(wx).toBeCloseTo(2.5, 6);
    expect(wy).toBeCloseTo(1.25, 6);
  });

  it("world origin lands at the bottom-left of the canvas", () => {
    expect(arena.toPixels(0, 0)).toEqual([0, 400]);
    expect(arena.toPixels(6, 4)).toEqual([600, 0]);
  });
});

describe("trails and colors", () => {
  it("assigns one stable color per sub-task", () => {
    const arena = new ArenaView(layout, 600, 400);
    const a = arena.colorFor("T2: Find blue flag");
    const b = arena.colorFor("T2: Navigate to switch");
    expect(a).not.toBe(b);
    expect(arena.colorFor("T2: Find blue flag")).toBe(a);
  });

  it("caps trail length", () => {
    const arena = new ArenaView(layout, 600, 400);
    for (let k = 0; k < arena.maxTrail + 50; k += 1) {
      arena.observe(snapshot(k));
    }
    const ctx = new RecordingContext();
    arena.render(ctx, snapshot(999));
    // 2 robots x maxTrail segments upper-bounds the stroke count, plus the
    // single comm edge
    expect(ctx.count("stroke")).toBeLessThanOrEqual(2 * arena.maxTrail + 2);
  });
});

describe("scene rendering", () => {
  it("draws walls, gate, switch, flag, goals, edge and robots", () => {
    const arena = new ArenaView(layout, 600, 400);
    const snap = snapshot(1);
    arena.observe(snap);
    const ctx = new RecordingContext();
    arena.render(ctx, snap);
    // background + 2 walls + 1 gate
    expect(ctx.count("fillRect")).toBe(4);
    // switch + flag + 3 goals + 2 robots + 1 carrying ring
    expect(ctx.count("arc")).toBe(8);
    expect(ctx.count("clearRect")).toBe(1);
  });

  it("renders the gate open state with a different fill", () => {
    const arena = new ArenaView(layout, 600, 400);
    const closed = new RecordingContext();
    arena.render(closed, snapshot(1, { gates: [false] }));
    const open = new RecordingContext();
    arena.render(open, snapshot(1, { gates: [true] }));
    const gateFill = (ctx: RecordingContext) =>
      ctx.calls.filter((c) => c.op === "fillRect")[3].args[4];
    expect(gateFill(closed)).not.toBe(gateFill(open));
  });

  it("renders only what the snapshot carries", () => {
    const arena = new ArenaView(layout, 600, 400);
    const snap = snapshot(1, { comm_edges: [] });
    const ctx = new RecordingContext();
    arena.render(ctx, snap);
    expect(ctx.count("stroke")).toBe(1); // only the carrying ring
  });
});
