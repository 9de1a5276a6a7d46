/**
 * Arena rendering: walls, colored switches and flags, goals, robots with
 * sub-task-colored trails, and the communication graph. Draws against a
 * minimal 2D-context interface so tests can record calls without a browser.
 */

import type { LayoutWire, SnapshotT } from "./messages.js";

export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  fill(): void;
  stroke(): void;
  clearRect(x: number, y: number, w: number, h: number): void;
}

const SUBTASK_PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

export class ArenaView {
  private trails: [number, number][][] = [];
  private trailColors: string[][] = [];
  private subtaskColors = new Map<string, string>();
  readonly maxTrail = 400;

  constructor(
    private readonly layout: LayoutWire,
    private readonly pixelWidth: number,
    private readonly pixelHeight: number,
  ) {}

  colorFor(subtask: string): string {
    let color = this.subtaskColors.get(subtask);
    if (!color) {
      color = SUBTASK_PALETTE[this.subtaskColors.size % SUBTASK_PALETTE.length];
      this.subtaskColors.set(subtask, color);
    }
    return color;
  }

  toPixels(x: number, y: number): [number, number] {
    return [
      (x / this.layout.width) * this.pixelWidth,
      // world y grows upward, canvas y grows downward
      this.pixelHeight - (y / this.layout.height) * this.pixelHeight,
    ];
  }

  toWorld(px: number, py: number): [number, number] {
    return [
      (px / this.pixelWidth) * this.layout.width,
      ((this.pixelHeight - py) / this.pixelHeight) * this.layout.height,
    ];
  }

  /** Record the snapshot into the per-robot trails. */
  observe(snapshot: SnapshotT): void {
    snapshot.robots.forEach((robot, index) => {
      if (!this.trails[index]) {
        this.trails[index] = [];
        this.trailColors[index] = [];
      }
      this.trails[index].push([robot.x, robot.y]);
      this.trailColors[index].push(this.colorFor(robot.subtask));
      if (this.trails[index].length > this.maxTrail) {
        this.trails[index].shift();
        this.trailColors[index].shift();
      }
    });
  }

  render(ctx: Draw2D, snapshot: SnapshotT): void {
    ctx.clearRect(0, 0, this.pixelWidth, this.pixelHeight);
    ctx.globalAlpha = 1;
    ctx.fillStyle = "#fafafa";
    ctx.fillRect(0, 0, this.pixelWidth, this.pixelHeight);

    ctx.fillStyle = "#222";
    for (const wall of this.layout.walls) {
      const [x0, y1] = this.toPixels(wall.x0, wall.y0);
      const [x1, y0] = this.toPixels(wall.x1, wall.y1);
      ctx.fillRect(x0, y0, x1 - x0, y1 - y0);
    }
    this.layout.gates.forEach((gate) => {
      const open = snapshot.gates[gate.index];
      ctx.fillStyle = open ? "#c8e6c9" : "#8d6e63";
      const [x0, y1] = this.toPixels(gate.rect.x0, gate.rect.y0);
      const [x1, y0] = this.toPixels(gate.rect.x1, gate.rect.y1);
      ctx.fillRect(x0, y0, x1 - x0, y1 - y0);
    });

    this.layout.switches.forEach((sw) => {
      const [x, y] = this.toPixels(sw.pos[0], sw.pos[1]);
      ctx.fillStyle = sw.color;
      ctx.globalAlpha = snapshot.switches[sw.index] ? 1.0 : 0.45;
      ctx.beginPath();
      ctx.arc(x, y, (sw.radius / this.layout.width) * this.pixelWidth, 0,
        2 * Math.PI);
      ctx.fill();
    });
    ctx.globalAlpha = 1;

    snapshot.flags.forEach((flag) => {
      const [x, y] = this.toPixels(flag.x, flag.y);
      ctx.fillStyle = flag.color;
      ctx.beginPath();
      ctx.arc(x, y, 6, 0, 2 * Math.PI);
      ctx.fill();
    });

    ctx.fillStyle = "#1b5e20";
    for (const goal of this.layout.goals) {
      const [x, y] = this.toPixels(goal[0], goal[1]);
      ctx.beginPath();
      ctx.arc(x, y, 4, 0, 2 * Math.PI);
      ctx.fill();
    }

    ctx.strokeStyle = "#90caf9";
    ctx.lineWidth = 1;
    for (const [i, j] of snapshot.comm_edges) {
      const a = snapshot.robots[i];
      const b = snapshot.robots[j];
      if (!a || !b) continue;
      const [ax, ay] = this.toPixels(a.x, a.y);
      const [bx, by] = this.toPixels(b.x, b.y);
      ctx.beginPath();
      ctx.moveTo(ax, ay);
      ctx.lineTo(bx, by);
      ctx.stroke();
    }

    ctx.lineWidth = 2;
    this.trails.forEach((trail, robot) => {
      for (let k = 1; k < trail.length; k += 1) {
        ctx.strokeStyle = this.trailColors[robot][k];
        const [ax, ay] = this.toPixels(trail[k - 1][0], trail[k - 1][1]);
        const [bx, by] = this.toPixels(trail[k][0], trail[k][1]);
        ctx.beginPath();
        ctx.moveTo(ax, ay);
        ctx.lineTo(bx, by);
        ctx.stroke();
      }
    });

    snapshot.robots.forEach((robot) => {
      const [x, y] = this.toPixels(robot.x, robot.y);
      ctx.fillStyle = this.colorFor(robot.subtask);
      ctx.beginPath();
      ctx.arc(x, y, 5, 0, 2 * Math.PI);
      ctx.fill();
      if (robot.carrying) {
        ctx.strokeStyle = "#000";
        ctx.beginPath();
        ctx.arc(x, y, 8, 0, 2 * Math.PI);
        ctx.stroke();
      }
    });
  }
}
