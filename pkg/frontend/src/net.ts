// Thin WebSocket client: one JSON message per text frame, typed events.

import { ClientMsg, ServerMsg, decodeServerMsg, encode } from "./protocol.js";

export class Connection {
  private ws: WebSocket;
  onmessage: ((msg: ServerMsg) => void) | null = null;
  onclose: (() => void) | null = null;
  onopen: (() => void) | null = null;

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => this.onopen?.();
    this.ws.onclose = () => this.onclose?.();
    this.ws.onmessage = (ev) => {
      const data = typeof ev.data === "string" ? ev.data : "";
      for (const line of data.split("\n")) {
        if (!line.trim()) continue;
        this.onmessage?.(decodeServerMsg(line));
      }
    };
  }

  send(msg: ClientMsg): void {
    if (this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(encode(msg));
    }
  }

  close(): void {
    this.ws.close();
  }
}
