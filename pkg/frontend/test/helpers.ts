import type { Draw2D } from "../src/arena.js";
import type { LayoutWire, SnapshotT } from "../src/messages.js";

/** Records every draw call; good enough to assert scene structure. */
export class RecordingContext implements Draw2D {
  fillStyle = "";
  strokeStyle = "";
  lineWidth = 1;
  globalAlpha = 1;
  calls: { op: string; args: unknown[] }[] = [];

  private log(op: string, ...args: unknown[]): void {
    this.calls.push({ op, args });
  }

  fillRect(...args: number[]): void { this.log("fillRect", ...args, String(this.fillStyle)); }
  clearRect(...args: number[]): void { this.log("clearRect", ...args); }
  beginPath(): void { this.log("beginPath"); }
  arc(...args: number[]): void { this.log("arc", ...args); }
  moveTo(...args: number[]): void { this.log("moveTo", ...args); }
  lineTo(...args: number[]): void { this.log("lineTo", ...args); }
  fill(): void { this.log("fill", String(this.fillStyle)); }
  stroke(): void { this.log("stroke", String(this.strokeStyle)); }

  count(op: string): number {
    return this.calls.filter((c) => c.op === op).length;
  }
}

export const layout: LayoutWire = {
  name: "retrieve-flag",
  width: 6,
  height: 4,
  walls: [
    { x0: 3.9, y0: 0, x1: 4.1, y1: 1.2 },
    { x0: 3.9, y0: 2.9, x1: 4.1, y1: 4 },
  ],
  gates: [{ rect: { x0: 3.9, y0: 1.2, x1: 4.1, y1: 2.9 }, index: 0 }],
  switches: [{ pos: [2.8, 1.0], radius: 0.35, color: "yellow", index: 0 }],
  flags: [{ pos: [1.0, 3.2], color: "blue", order: 0 }],
  goals: [[5.0, 1.2], [5.4, 1.2], [5.0, 2.0]],
  base: [0.6, 0.6],
};

export function snapshot(tick: number, overrides: Partial<SnapshotT> = {}):
    SnapshotT {
  return {
    v: 1,
    kind: "snapshot",
    tick,
    robots: [
      { x: 1.0, y: 1.0, vx: 0, vy: 0, carrying: false,
        subtask: "T2: Find blue flag", confidence: 0.99 },
      { x: 2.0, y: 1.5, vx: 0, vy: 0, carrying: true,
        subtask: "T2: Navigate to switch", confidence: 0.97 },
    ],
    flags: [{ x: 1.0, y: 3.2, color: "blue", carried: false, delivered: false }],
    gates: [false],
    switches: [false],
    comm_edges: [[0, 1]],
    events: [],
    distance_tail: [[1.5], [0.7]],
    done: false,
    ...overrides,
  };
}
