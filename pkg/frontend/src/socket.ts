/**
 * Typed session socket: validates every inbound message and dispatches by
 * kind. The transport is injectable so tests can drive a fake.
 */

import { parseServerMessage, ServerMessageT } from "./messages.js";

export interface WireSocket {
  send(data: string): void;
  close(): void;
  set onmessage(handler: (event: { data: string }) => void);
}

type Handler = (message: ServerMessageT) => void;

export class SessionSocket {
  private handlers = new Map<string, Handler[]>();
  private anyHandlers: Handler[] = [];

  constructor(private readonly wire: WireSocket) {
    wire.onmessage = (event) => this.dispatch(event.data);
  }

  on(kind: "snapshot" | "ack" | "completed" | "error", handler: Handler): void {
    const list = this.handlers.get(kind) ?? [];
    list.push(handler);
    this.handlers.set(kind, list);
  }

  onAny(handler: Handler): void {
    this.anyHandlers.push(handler);
  }

  send(payload: string): void {
    this.wire.send(payload);
  }

  close(): void {
    this.wire.close();
  }

  private dispatch(raw: string): void {
    let message: ServerMessageT;
    try {
      message = parseServerMessage(raw);
    } catch (error) {
      const fallback: ServerMessageT = {
        v: 1,
        kind: "error",
        code: "bad-message",
        message: String(error),
      };
      (this.handlers.get("error") ?? []).forEach((h) => h(fallback));
      return;
    }
    (this.handlers.get(message.kind) ?? []).forEach((h) => h(message));
    this.anyHandlers.forEach((h) => h(message));
  }
}
