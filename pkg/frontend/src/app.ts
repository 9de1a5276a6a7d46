/**
 * Console entry point: wires the DOM, the session socket, the arena canvas
 * and the timeline chart together. Browser-only; all logic lives in the
 * testable modules it imports.
 */

import { ArenaView } from "./arena.js";
import { LayoutWire, SnapshotT, pauseMessage, resumeMessage } from "./messages.js";
import { buildStartRun, displacementFromDrag, flagLostMessage, pickRobot }
  from "./panels.js";
import { SessionSocket } from "./socket.js";
import { TimelineStore } from "./timeline.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function main(): void {
  const arenaCanvas = byId<HTMLCanvasElement>("arena");
  const chartCanvas = byId<HTMLCanvasElement>("timeline");
  const statusLine = byId<HTMLDivElement>("status");
  const eventLog = byId<HTMLUListElement>("events");

  const protocol = location.protocol === "https:" ? "wss" : "ws";
  const ws = new WebSocket(`${protocol}://${location.host}/session`);
  const socket = new SessionSocket({
    send: (data) => ws.send(data),
    close: () => ws.close(),
    set onmessage(handler: (event: { data: string }) => void) {
      ws.onmessage = (event) => handler({ data: String(event.data) });
    },
  });

  let arena: ArenaView | null = null;
  let timeline = new TimelineStore();
  let lastSnapshot: SnapshotT | null = null;
  let paused = false;
  let dragRobot: number | null = null;

  socket.on("ack", (message) => {
    if (message.kind !== "ack") return;
    if (message.for === "start_run" && message.layout) {
      arena = new ArenaView(message.layout as LayoutWire,
        arenaCanvas.width, arenaCanvas.height);
      timeline = new TimelineStore();
      eventLog.innerHTML = "";
      const resolved = (message.resolved_subtasks ?? []).join(", ");
      statusLine.textContent = `running — initial sub-tasks: ${resolved}`;
    }
  });

  socket.on("snapshot", (message) => {
    if (message.kind !== "snapshot" || !arena) return;
    lastSnapshot = message;
    arena.observe(message);
    arena.render(arenaCanvas.getContext("2d")!, message);
    timeline.observe(message);
    timeline.render(chartCanvas.getContext("2d")!, chartCanvas.width,
      chartCanvas.height);
    for (const event of message.events) {
      const item = document.createElement("li");
      item.textContent = `t=${message.tick} ${event}`;
      eventLog.prepend(item);
      while (eventLog.childElementCount > 12) eventLog.lastChild?.remove();
    }
    const labels = message.robots
      .map((r, i) => `R${i}: ${r.subtask} (${(r.confidence * 100).toFixed(0)}%)`)
      .join("  |  ");
    byId<HTMLDivElement>("subtasks").textContent = labels;
  });

  socket.on("completed", (message) => {
    if (message.kind !== "completed") return;
    statusLine.textContent = `completed at tick ${message.tick}`;
  });

  socket.on("error", (message) => {
    if (message.kind !== "error") return;
    statusLine.textContent = `error: ${message.code} — ${message.message}`;
  });

  byId<HTMLButtonElement>("start").addEventListener("click", () => {
    const inits = (byId<HTMLTextAreaElement>("robot-inits").value || "")
      .split("\n");
    try {
      socket.send(buildStartRun({
        scenario: byId<HTMLSelectElement>("scenario").value,
        commandText: byId<HTMLInputElement>("command").value,
        robotInits: inits,
        seed: Number(byId<HTMLInputElement>("seed").value || "0"),
        nRobots: Number(byId<HTMLInputElement>("nrobots").value || "3"),
        initMode: byId<HTMLSelectElement>("init-mode").value,
      }));
    } catch (error) {
      statusLine.textContent = String(error);
    }
  });

  byId<HTMLButtonElement>("flag-lost").addEventListener("click", () => {
    socket.send(flagLostMessage());
  });

  byId<HTMLButtonElement>("pause").addEventListener("click", () => {
    paused = !paused;
    socket.send(paused ? pauseMessage() : resumeMessage());
    byId<HTMLButtonElement>("pause").textContent = paused ? "resume" : "pause";
  });

  arenaCanvas.addEventListener("mousedown", (event) => {
    if (!arena || !lastSnapshot) return;
    dragRobot = pickRobot(arena, lastSnapshot.robots, event.offsetX,
      event.offsetY);
  });
  arenaCanvas.addEventListener("mouseup", (event) => {
    if (arena && dragRobot !== null) {
      socket.send(displacementFromDrag(arena, dragRobot, event.offsetX,
        event.offsetY));
    }
    dragRobot = null;
  });

  fetch("/api/scenarios").then(async (res) => {
    const body = await res.json();
    const select = byId<HTMLSelectElement>("scenario");
    for (const name of body.scenarios as string[]) {
      const option = document.createElement("option");
      option.value = name;
      option.textContent = name;
      select.appendChild(option);
    }
  });
}

window.addEventListener("DOMContentLoaded", main);
