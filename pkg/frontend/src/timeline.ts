/**
 * Live distance-to-target chart: one polyline per robot, fed from the
 * distance tails the server includes in every snapshot.
 */

import type { Draw2D } from "./arena.js";
import type { SnapshotT } from "./messages.js";

const LINE_COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"];

export class TimelineStore {
  readonly series: { tick: number; value: number | null }[][] = [];

  constructor(readonly capacity: number = 600) {}

  observe(snapshot: SnapshotT): void {
    snapshot.distance_tail.forEach((tail, robot) => {
      if (!this.series[robot]) this.series[robot] = [];
      const latest = tail.length ? tail[tail.length - 1] : null;
      this.series[robot].push({ tick: snapshot.tick, value: latest });
      if (this.series[robot].length > this.capacity) {
        this.series[robot].shift();
      }
    });
  }

  maxValue(): number {
    let max = 1e-9;
    for (const row of this.series) {
      for (const point of row) {
        if (point.value !== null && point.value > max) max = point.value;
      }
    }
    return max;
  }

  render(ctx: Draw2D, width: number, height: number): void {
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#ffffff";
    ctx.fillRect(0, 0, width, height);
    if (!this.series.length) return;
    const ticks = this.series[0].map((p) => p.tick);
    const t0 = ticks[0];
    const t1 = Math.max(ticks[ticks.length - 1], t0 + 1);
    const vMax = this.maxValue();
    this.series.forEach((row, robot) => {
      ctx.strokeStyle = LINE_COLORS[robot % LINE_COLORS.length];
      ctx.lineWidth = 1.5;
      let started = false;
      ctx.beginPath();
      for (const point of row) {
        if (point.value === null) {
          started = false;
          continue;
        }
        const x = ((point.tick - t0) / (t1 - t0)) * width;
        const y = height - (point.value / vMax) * (height - 4) - 2;
        if (!started) {
          ctx.moveTo(x, y);
          started = true;
        } else {
          ctx.lineTo(x, y);
        }
      }
      ctx.stroke();
    });
  }
}
