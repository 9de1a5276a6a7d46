/**
 * Wire schema for the operator session, version 1.
 *
 * Every message carries `v`; the console validates everything it receives and
 * only ever renders data present in snapshots (no client-side simulation).
 */

import { z } from "zod";

export const SCHEMA_VERSION = 1;

export const RobotSnapshot = z.object({
  x: z.number(),
  y: z.number(),
  vx: z.number(),
  vy: z.number(),
  carrying: z.boolean(),
  subtask: z.string(),
  confidence: z.number(),
});

export const FlagSnapshot = z.object({
  x: z.number(),
  y: z.number(),
  color: z.string(),
  carried: z.boolean(),
  delivered: z.boolean(),
});

export const Snapshot = z.object({
  v: z.literal(SCHEMA_VERSION),
  kind: z.literal("snapshot"),
  tick: z.number().int().nonnegative(),
  robots: z.array(RobotSnapshot),
  flags: z.array(FlagSnapshot),
  gates: z.array(z.boolean()),
  switches: z.array(z.boolean()),
  comm_edges: z.array(z.tuple([z.number().int(), z.number().int()])),
  events: z.array(z.string()),
  distance_tail: z.array(z.array(z.number().nullable())),
  done: z.boolean(),
});

export const Ack = z.object({
  v: z.literal(SCHEMA_VERSION),
  kind: z.literal("ack"),
  for: z.string(),
  resolved_subtasks: z.array(z.string()).optional(),
  layout: z.unknown().optional(),
  n_robots: z.number().int().optional(),
});

export const Completed = z.object({
  v: z.literal(SCHEMA_VERSION),
  kind: z.literal("completed"),
  tick: z.number().int(),
  metrics: z.record(z.unknown()),
});

export const ErrorMessage = z.object({
  v: z.literal(SCHEMA_VERSION),
  kind: z.literal("error"),
  code: z.string(),
  message: z.string(),
});

export const ServerMessage = z.discriminatedUnion("kind", [
  Snapshot,
  Ack,
  Completed,
  ErrorMessage,
]);

export type SnapshotT = z.infer<typeof Snapshot>;
export type ServerMessageT = z.infer<typeof ServerMessage>;

export interface LayoutWire {
  name: string;
  width: number;
  height: number;
  walls: { x0: number; y0: number; x1: number; y1: number }[];
  gates: { rect: { x0: number; y0: number; x1: number; y1: number }; index: number }[];
  switches: { pos: [number, number]; radius: number; color: string; index: number }[];
  flags: { pos: [number, number]; color: string; order: number }[];
  goals: [number, number][];
  base: [number, number] | null;
}

export function parseServerMessage(raw: string): ServerMessageT {
  return ServerMessage.parse(JSON.parse(raw));
}

export interface StartRunOptions {
  scenario: string;
  commandText: string;
  initTexts?: Record<number, string>;
  seed?: number;
  nRobots?: number;
  initMode?: string;
  tickCap?: number;
}

export function startRunMessage(options: StartRunOptions): string {
  if (!options.commandText.trim()) {
    throw new Error("command text must be non-empty");
  }
  return JSON.stringify({
    v: SCHEMA_VERSION,
    kind: "start_run",
    scenario: options.scenario,
    command_text: options.commandText,
    init_texts: options.initTexts ?? {},
    seed: options.seed ?? 0,
    n_robots: options.nRobots ?? 3,
    init_mode: options.initMode ?? "random",
    tick_cap: options.tickCap ?? 2000,
  });
}

export function injectEventMessage(event: string): string {
  return JSON.stringify({ v: SCHEMA_VERSION, kind: "inject", event });
}

export function injectDisplacementMessage(
  robot: number,
  pos: [number, number],
): string {
  return JSON.stringify({
    v: SCHEMA_VERSION,
    kind: "inject",
    displacement: { robot, pos },
  });
}

export function pauseMessage(): string {
  return JSON.stringify({ v: SCHEMA_VERSION, kind: "pause" });
}

export function resumeMessage(): string {
  return JSON.stringify({ v: SCHEMA_VERSION, kind: "resume" });
}
