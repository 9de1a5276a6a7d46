import { describe, expect, it } from "vitest";

import { SessionSocket, WireSocket } from "../src/socket.js";
import { snapshot } from "./helpers.js";

class FakeWire implements WireSocket {
  sent: string[] = [];
  closed = false;
  private handler: ((event: { data: string }) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
  }

  set onmessage(handler: (event: { data: string }) => void) {
    this.handler = handler;
  }

  push(raw: unknown): void {
    this.handler?.({ data: JSON.stringify(raw) });
  }
}

describe("session socket", () => {
  it("dispatches by message kind", () => {
    const wire = new FakeWire();
    const socket = new SessionSocket(wire);
    const ticks: number[] = [];
    const acks: string[] = [];
    socket.on("snapshot", (m) => m.kind === "snapshot" && ticks.push(m.tick));
    socket.on("ack", (m) => m.kind === "ack" && acks.push(m.for));
    wire.push({ v: 1, kind: "ack", for: "start_run" });
    wire.push(snapshot(1));
    wire.push(snapshot(2));
    expect(ticks).toEqual([1, 2]);
    expect(acks).toEqual(["start_run"]);
  });

  it("invalid payloads surface as error messages", () => {
    const wire = new FakeWire();
    const socket = new SessionSocket(wire);
    const codes: string[] = [];
    socket.on("error", (m) => m.kind === "error" && codes.push(m.code));
    wire.push({ v: 3, kind: "snapshot" });
    expect(codes).toEqual(["bad-message"]);
  });

  it("round trip: a sent start_run is observable on the wire", () => {
    const wire = new FakeWire();
    const socket = new SessionSocket(wire);
    socket.send('{"v":1,"kind":"pause"}');
    expect(wire.sent).toHaveLength(1);
    socket.close();
    expect(wire.closed).toBe(true);
  });

  it("onAny sees everything in order", () => {
    const wire = new FakeWire();
    const socket = new SessionSocket(wire);
    const kinds: string[] = [];
    socket.onAny((m) => kinds.push(m.kind));
    wire.push(snapshot(1));
    wire.push({ v: 1, kind: "completed", tick: 4, metrics: {} });
    expect(kinds).toEqual(["snapshot", "completed"]);
  });
});
