// WebSocket wrapper: connect, send typed messages, surface parsed messages.

import type { ClientMessage, Condition, ServerMessage } from "./protocol.js";
import { helloMessage, parseServerMessage } from "./protocol.js";

export interface Connection {
  send(msg: ClientMessage): void;
  end(): void;
  close(): void;
  readonly open: boolean;
}

export function wsUrl(base: string = window.location.origin): string {
  return base.replace(/^http/, "ws").replace(/\/$/, "") + "/ws";
}

export function connect(
  url: string,
  subjectId: string,
  condition: Condition,
  onMessage: (msg: ServerMessage) => void,
  onClose: () => void,
): Connection {
  const ws = new WebSocket(url);
  let isOpen = false;
  ws.onopen = () => {
    isOpen = true;
    ws.send(JSON.stringify(helloMessage(subjectId, condition)));
  };
  ws.onmessage = (ev) => {
    const msg = parseServerMessage(String(ev.data));
    if (msg) onMessage(msg);
  };
  ws.onclose = () => {
    isOpen = false;
    onClose();
  };
  ws.onerror = () => {
    // onclose follows and handles the state transition
  };
  return {
    send(msg: ClientMessage) {
      if (isOpen && ws.readyState === WebSocket.OPEN) ws.send(JSON.stringify(msg));
    },
    end() {
      this.send({ type: "end" });
    },
    close() {
      ws.close();
    },
    get open() {
      return isOpen && ws.readyState === WebSocket.OPEN;
    },
  };
}
