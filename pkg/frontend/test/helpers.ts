import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { ProtocolClient, type Transport } from "../src/protocol.js";
import { StdioTransport } from "../src/transports.js";

export const REPO_ROOT = join(dirname(fileURLToPath(import.meta.url)), "..", "..");

export function spawnBackend(args: string[] = []): ProtocolClient {
  const transport = StdioTransport.spawn(
    "python3",
    ["-m", "rulesmith", "serve", "--stdio", ...args],
    REPO_ROOT,
  );
  return new ProtocolClient(transport);
}

export async function waitFor(
  predicate: () => boolean,
  timeoutMs = 10000,
  message = "condition",
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (predicate()) return;
    await new Promise((resolve) => setTimeout(resolve, 10));
  }
  throw new Error(`timed out waiting for ${message}`);
}

/** In-memory transport pair for unit tests. */
export class FakeTransport implements Transport {
  sent: string[] = [];
  private lineHandlers: ((line: string) => void)[] = [];
  private closeHandlers: (() => void)[] = [];

  send(line: string): void {
    this.sent.push(line);
  }

  onLine(handler: (line: string) => void): void {
    this.lineHandlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    for (const handler of this.closeHandlers) handler();
  }

  receive(message: unknown): void {
    for (const handler of this.lineHandlers) handler(JSON.stringify(message));
  }
}
