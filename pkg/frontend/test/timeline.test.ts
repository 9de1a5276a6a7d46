import { describe, expect, it } from "vitest";

import { TimelineStore } from "../src/timeline.js";
import { RecordingContext, snapshot } from "./helpers.js";

describe("timeline store", () => {
  it("appends the latest tail value per robot", () => {
    const store = new TimelineStore();
    store.observe(snapshot(1, { distance_tail: [[2.0, 1.8], [0.9]] }));
    store.observe(snapshot(2, { distance_tail: [[1.6], [0.8]] }));
    expect(store.series[0].map((p) => p.value)).toEqual([1.8, 1.6]);
    expect(store.series[1].map((p) => p.value)).toEqual([0.9, 0.8]);
    expect(store.series[0].map((p) => p.tick)).toEqual([1, 2]);
  });

  it("trims to capacity", () => {
    const store = new TimelineStore(5);
    for (let k = 0; k < 12; k += 1) {
      store.observe(snapshot(k, { distance_tail: [[k], [k]] }));
    }
    expect(store.series[0]).toHaveLength(5);
    expect(store.series[0][0].tick).toBe(7);
  });

  it("tracks the maximum for axis scaling", () => {
    const store = new TimelineStore();
    store.observe(snapshot(1, { distance_tail: [[3.5], [0.2]] }));
    expect(store.maxValue()).toBeCloseTo(3.5);
  });

  it("handles empty tails as gaps", () => {
    const store = new TimelineStore();
    store.observe(snapshot(1, { distance_tail: [[], [1.0]] }));
    expect(store.series[0][0].value).toBeNull();
    const ctx = new RecordingContext();
    store.render(ctx, 300, 100);
    expect(ctx.count("stroke")).toBe(2);
  });

  it("renders one polyline per robot", () => {
    const store = new TimelineStore();
    for (let k = 0; k < 4; k += 1) {
      store.observe(snapshot(k, { distance_tail: [[2 - k * 0.1], [1 + k * 0.1]] }));
    }
    const ctx = new RecordingContext();
    store.render(ctx, 300, 100);
    expect(ctx.count("stroke")).toBe(2);
    expect(ctx.count("lineTo")).toBe(2 * 3);
  });
});
