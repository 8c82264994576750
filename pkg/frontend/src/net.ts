// WebSocket connection to the session server; one socket, messages applied
// in order, reconnect banner on drop.

import { encodeMessage, decodeServerMessage, type ClientMessage,
         type ServerMessage } from "./protocol.js";

export interface Connection {
  send(message: ClientMessage): void;
  close(): void;
}

export function connect(host: string, port: number,
                        onMessage: (m: ServerMessage) => void,
                        onStatus: (up: boolean) => void): Connection {
  const socket = new WebSocket(`ws://${host}:${port}`);
  socket.onopen = () => onStatus(true);
  socket.onclose = () => onStatus(false);
  socket.onerror = () => onStatus(false);
  socket.onmessage = (ev) => {
    try {
      onMessage(decodeServerMessage(String(ev.data)));
    } catch (err) {
      console.error("bad server message", err);
    }
  };
  return {
    send(message: ClientMessage): void {
      if (socket.readyState === WebSocket.OPEN) {
        socket.send(encodeMessage(message));
      }
    },
    close(): void {
      socket.close();
    },
  };
}
