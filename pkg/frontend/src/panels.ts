/**
 * Operator controls: the command form (natural-language command plus optional
 * per-robot sub-task briefings) and the disruption controls (one-click flag
 * loss; drag-a-robot displacement mapped into world coordinates).
 */

import type { ArenaView } from "./arena.js";
import {
  injectDisplacementMessage,
  injectEventMessage,
  startRunMessage,
} from "./messages.js";

export interface CommandForm {
  scenario: string;
  commandText: string;
  robotInits: string[];   // one entry per robot, empty = task start
  seed: number;
  nRobots: number;
  initMode: string;
}

export function buildStartRun(form: CommandForm): string {
  const initTexts: Record<number, string> = {};
  form.robotInits.forEach((text, index) => {
    if (text.trim()) initTexts[index] = text.trim();
  });
  return startRunMessage({
    scenario: form.scenario,
    commandText: form.commandText,
    initTexts,
    seed: form.seed,
    nRobots: form.nRobots,
    initMode: form.initMode,
  });
}

export function flagLostMessage(): string {
  return injectEventMessage("FlagLost");
}

/** Map a drag-release pixel position to a robot displacement message. */
export function displacementFromDrag(
  arena: ArenaView,
  robot: number,
  pixelX: number,
  pixelY: number,
): string {
  const [x, y] = arena.toWorld(pixelX, pixelY);
  return injectDisplacementMessage(robot, [
    Math.round(x * 1000) / 1000,
    Math.round(y * 1000) / 1000,
  ]);
}

/** The robot index nearest to a click, within a pick radius (pixels). */
export function pickRobot(
  arena: ArenaView,
  robots: { x: number; y: number }[],
  pixelX: number,
  pixelY: number,
  pickRadius: number = 14,
): number | null {
  let best: number | null = null;
  let bestDist = pickRadius;
  robots.forEach((robot, index) => {
    const [px, py] = arena.toPixels(robot.x, robot.y);
    const dist = Math.hypot(px - pixelX, py - pixelY);
    if (dist <= bestDist) {
      best = index;
      bestDist = dist;
    }
  });
  return best;
}
