/**
 * Browser transport: the bridge relays WebSocket text messages to the
 * backend's stdio wire verbatim, one protocol line per message.
 */

import type { Transport } from "./protocol.js";

export class WebSocketTransport implements Transport {
  private lineHandlers: ((line: string) => void)[] = [];
  private closeHandlers: (() => void)[] = [];

  private constructor(private socket: WebSocket) {
    socket.onmessage = (event) => {
      for (const line of String(event.data).split("\n")) {
        if (!line.trim()) continue;
        for (const handler of this.lineHandlers) handler(line);
      }
    };
    socket.onclose = () => {
      for (const handler of this.closeHandlers) handler();
    };
  }

  static connect(url: string): Promise<WebSocketTransport> {
    return new Promise((resolve, reject) => {
      const socket = new WebSocket(url);
      socket.onopen = () => resolve(new WebSocketTransport(socket));
      socket.onerror = () => reject(new Error(`cannot connect to ${url}`));
    });
  }

  send(line: string): void {
    this.socket.send(line);
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    this.socket.close();
  }
}
