/**
 * Message types and the request/response client for the session protocol.
 *
 * The wire is newline-delimited JSON (see ../../docs/protocol.md): every
 * request gets exactly one response with the same requestId, and the server
 * may push notifications at any time.  The client owns requestId allocation
 * and correlation; transports only move lines.
 */

export interface ButtonMap {
  space: boolean;
  up: boolean;
  down: boolean;
  left: boolean;
  right: boolean;
}

export const BUTTONS: (keyof ButtonMap)[] = ["space", "up", "down", "left", "right"];

export function noButtons(): ButtonMap {
  return { space: false, up: false, down: false, left: false, right: false };
}

export interface ObjectJson {
  id: number;
  sprite: string;
  x: number;
  y: number;
  vx: number;
  vy: number;
  vxUserSet: boolean;
  vyUserSet: boolean;
}

export interface FrameJson {
  index: number;
  input: { buttons: ButtonMap; prevButtons: ButtonMap };
  objects: ObjectJson[];
}

export interface SpriteJson {
  name: string;
  width: number;
  height: number;
}

export interface ProjectJson {
  schemaVersion: number;
  name: string;
  gridWidth: number;
  gridHeight: number;
  sprites: SpriteJson[];
  frames: FrameJson[];
  engine: unknown;
  config: {
    theta: number;
    maxIterations: number;
    vmax: number;
    kinematics: boolean;
    tickRate: number;
  };
}

export interface LearnSummary {
  generation: number;
  converged: boolean;
  totalError: number;
  ruleCount: number;
}

export interface ErrorInfo {
  kind: string;
  message: string;
}

export interface Response {
  requestId: number | null;
  ok: boolean;
  payload?: unknown;
  error?: ErrorInfo;
}

export interface Notification {
  event: string;
  payload: unknown;
}

export class RequestFailed extends Error {
  readonly kind: string;

  constructor(info: ErrorInfo) {
    super(info.message);
    this.kind = info.kind;
  }
}

/** Reassembles newline-delimited messages from arbitrary chunk boundaries. */
export class LineCodec {
  private buffer = "";

  feed(chunk: string): string[] {
    this.buffer += chunk;
    const lines = this.buffer.split("\n");
    this.buffer = lines.pop() ?? "";
    return lines.filter((line) => line.trim().length > 0);
  }
}

export interface Transport {
  send(line: string): void;
  onLine(handler: (line: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

interface Pending {
  resolve(payload: unknown): void;
  reject(error: Error): void;
}

export class ProtocolClient {
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private notificationHandlers: ((note: Notification) => void)[] = [];
  private closeHandlers: (() => void)[] = [];
  closed = false;

  constructor(private transport: Transport) {
    transport.onLine((line) => this.dispatch(line));
    transport.onClose(() => {
      this.closed = true;
      for (const pending of this.pending.values()) {
        pending.reject(new Error("connection closed"));
      }
      this.pending.clear();
      for (const handler of this.closeHandlers) handler();
    });
  }

  request<T = unknown>(type: string, payload: Record<string, unknown> = {}): Promise<T> {
    if (this.closed) return Promise.reject(new Error("connection closed"));
    const requestId = this.nextId++;
    const line = JSON.stringify({ type, requestId, payload });
    return new Promise<T>((resolve, reject) => {
      this.pending.set(requestId, { resolve: resolve as Pending["resolve"], reject });
      this.transport.send(line);
    });
  }

  onNotification(handler: (note: Notification) => void): void {
    this.notificationHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    this.transport.close();
  }

  private dispatch(line: string): void {
    let message: Record<string, unknown>;
    try {
      message = JSON.parse(line);
    } catch {
      return; // not ours to crash on; the server never emits invalid JSON
    }
    if ("event" in message) {
      const note = message as unknown as Notification;
      for (const handler of this.notificationHandlers) handler(note);
      return;
    }
    const response = message as unknown as Response;
    if (response.requestId === null || response.requestId === undefined) return;
    const pending = this.pending.get(response.requestId);
    if (!pending) return;
    this.pending.delete(response.requestId);
    if (response.ok) {
      pending.resolve(response.payload);
    } else {
      pending.reject(new RequestFailed(response.error ?? { kind: "unknown", message: "request failed" }));
    }
  }
}
