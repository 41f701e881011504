/**
 * Node transports for the line protocol: a spawned backend on stdio, or a
 * unix stream socket.  The browser build uses ws-transport.ts instead.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { connect, type Socket } from "node:net";

import { LineCodec, type Transport } from "./protocol.js";

export class StdioTransport implements Transport {
  private codec = new LineCodec();
  private lineHandlers: ((line: string) => void)[] = [];
  private closeHandlers: (() => void)[] = [];

  private constructor(private child: ChildProcess) {
    child.stdout!.setEncoding("utf-8");
    child.stdout!.on("data", (chunk: string) => {
      for (const line of this.codec.feed(chunk)) {
        for (const handler of this.lineHandlers) handler(line);
      }
    });
    child.on("exit", () => {
      for (const handler of this.closeHandlers) handler();
    });
  }

  /** Spawn the backend service (`serve --stdio`) as a child process. */
  static spawn(command: string, args: string[], cwd?: string): StdioTransport {
    const child = spawn(command, args, {
      cwd,
      stdio: ["pipe", "pipe", "inherit"],
    });
    return new StdioTransport(child);
  }

  send(line: string): void {
    this.child.stdin!.write(line + "\n");
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    this.child.stdin!.end();
    this.child.kill();
  }
}

export class SocketTransport implements Transport {
  private codec = new LineCodec();
  private lineHandlers: ((line: string) => void)[] = [];
  private closeHandlers: (() => void)[] = [];

  private constructor(private socket: Socket) {
    socket.setEncoding("utf-8");
    socket.on("data", (chunk: string) => {
      for (const line of this.codec.feed(chunk)) {
        for (const handler of this.lineHandlers) handler(line);
      }
    });
    socket.on("close", () => {
      for (const handler of this.closeHandlers) handler();
    });
  }

  static connect(path: string): Promise<SocketTransport> {
    return new Promise((resolve, reject) => {
      const socket = connect(path);
      socket.once("connect", () => resolve(new SocketTransport(socket)));
      socket.once("error", reject);
    });
  }

  send(line: string): void {
    this.socket.write(line + "\n");
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    this.socket.end();
  }
}
