// WebSocket client: reconnects with backoff (the server keyframes every new
// connection) and stamps commands with a strictly increasing sequence number.

import type { CommandKind, CommandMessage, ServerMessage } from "./protocol.js";
import { parseServerMessage } from "./protocol.js";

export interface ClientHooks {
  onMessage: (msg: ServerMessage) => void;
  onStatus: (status: "connecting" | "connected" | "closed") => void;
}

export class TelemetryClient {
  private url: string;
  private hooks: ClientHooks;
  private socket: WebSocket | null = null;
  private seq = 0;
  private closed = false;
  private retryMs = 500;

  constructor(url: string, hooks: ClientHooks) {
    this.url = url;
    this.hooks = hooks;
  }

  connect(): void {
    this.hooks.onStatus("connecting");
    const socket = new WebSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.retryMs = 500;
      this.hooks.onStatus("connected");
    };
    socket.onmessage = (event: MessageEvent) => {
      const msg = parseServerMessage(String(event.data));
      if (msg) this.hooks.onMessage(msg);
    };
    socket.onclose = () => {
      this.hooks.onStatus("closed");
      if (!this.closed) {
        setTimeout(() => this.connect(), this.retryMs);
        this.retryMs = Math.min(this.retryMs * 2, 5000);
      }
    };
    socket.onerror = () => {
      socket.close();
    };
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }

  get nextSeq(): number {
    return this.seq + 1;
  }

  send(kind: CommandKind, fields: Partial<CommandMessage> = {}): boolean {
    if (!this.socket || this.socket.readyState !== WebSocket.OPEN) {
      return false;
    }
    this.seq += 1;
    const msg: CommandMessage = { type: "command", kind, seq: this.seq, ...fields };
    this.socket.send(JSON.stringify(msg));
    return true;
  }
}
