// WebSocket session wiring: joins on open, parses frames, rate-bounds intents.

import { humanMoveMessage, joinMessage, parseServerMessage, resetMessage,
         ServerMessage } from "./protocol.js";

export interface ClientHooks {
  onMessage(msg: ServerMessage): void;
  onStatus(status: "connecting" | "connected" | "closed"): void;
}

/** Rate bound: at most one intent per tick interval. */
export function shouldSend(lastSend: number, now: number, minIntervalMs: number): boolean {
  return now - lastSend >= minIntervalMs;
}

export class SessionClient {
  private ws: WebSocket | null = null;
  private lastSend = 0;

  constructor(private readonly url: string, private readonly hooks: ClientHooks,
              private readonly minSendIntervalMs = 100) {}

  connect(): void {
    this.hooks.onStatus("connecting");
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.hooks.onStatus("connected");
      ws.send(joinMessage());
    };
    ws.onmessage = (ev: MessageEvent) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg === null) {
        console.warn("skipping malformed frame", ev.data);
        return;
      }
      this.hooks.onMessage(msg);
    };
    ws.onclose = () => {
      this.hooks.onStatus("closed");
      this.ws = null;
    };
    ws.onerror = () => {
      // onclose follows; the banner comes from the status change
    };
  }

  get connected(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  /** Send a movement intent, bounded to the frame tick. Returns true if sent. */
  sendIntent(dx: number, dy: number, now = Date.now()): boolean {
    if (!this.connected || !shouldSend(this.lastSend, now, this.minSendIntervalMs)) {
      return false;
    }
    this.lastSend = now;
    this.ws!.send(humanMoveMessage(dx, dy));
    return true;
  }

  reset(): void {
    if (this.connected) this.ws!.send(resetMessage());
  }

  close(): void {
    this.ws?.close();
  }
}
