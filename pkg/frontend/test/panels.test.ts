import { describe, expect, it } from "vitest";

import { ArenaView } from "../src/arena.js";
import { buildStartRun, displacementFromDrag, flagLostMessage, pickRobot }
  from "../src/panels.js";
import { layout } from "./helpers.js";

describe("command panel", () => {
  it("collects only non-empty per-robot briefings", () => {
    const raw = buildStartRun({
      scenario: "multi-room",
      commandText: "Unlock the switches in sequence.",
      robotInits: ["Head to the first switch.", "  ", "Head to the third switch."],
      seed: 4,
      nRobots: 3,
      initMode: "even",
    });
    const message = JSON.parse(raw);
    expect(Object.keys(message.init_texts)).toEqual(["0", "2"]);
    expect(message.init_mode).toBe("even");
  });

  it("rejects empty commands before anything reaches the server", () => {
    expect(() => buildStartRun({
      scenario: "multi-room", commandText: "", robotInits: [], seed: 0,
      nRobots: 3, initMode: "random",
    })).toThrow();
  });
});

describe("disruption controls", () => {
  const arena = new ArenaView(layout, 600, 400);

  it("one-click flag loss", () => {
    expect(JSON.parse(flagLostMessage())).toEqual(
      { v: 1, kind: "inject", event: "FlagLost" });
  });

  it("drag release maps pixels into world coordinates", () => {
    const [px, py] = arena.toPixels(4.5, 2.0);
    const message = JSON.parse(displacementFromDrag(arena, 1, px, py));
    expect(message.displacement.robot).toBe(1);
    expect(message.displacement.pos[0]).toBeCloseTo(4.5, 3);
    expect(message.displacement.pos[1]).toBeCloseTo(2.0, 3);
  });

  it("picks the robot nearest the pointer within range", () => {
    const robots = [{ x: 1.0, y: 1.0 }, { x: 2.0, y: 1.5 }];
    const [px, py] = arena.toPixels(2.0, 1.5);
    expect(pickRobot(arena, robots, px + 3, py - 2)).toBe(1);
    expect(pickRobot(arena, robots, px + 300, py)).toBeNull();
  });
});
