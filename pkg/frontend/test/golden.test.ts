/**
 * Protocol replay: drive the message layer through a scripted
 * load -> edit -> learn -> predict -> play session against the real backend
 * and compare every line sent and received against the recorded transcript.
 *
 * Regenerate with:  UPDATE_GOLDEN=1 npx vitest run test/golden.test.ts
 */

import { readFileSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { ProtocolClient, noButtons, type Transport } from "../src/protocol.js";
import { StdioTransport } from "../src/transports.js";
import { REPO_ROOT } from "./helpers.js";

const GOLDEN_PATH = join(dirname(fileURLToPath(import.meta.url)), "golden", "transcript.json");

type Entry = { send: unknown } | { recv: unknown };

class RecordingTransport implements Transport {
  constructor(private inner: Transport, private log: Entry[]) {
    inner.onLine((line) => this.log.push({ recv: JSON.parse(line) }));
  }

  send(line: string): void {
    this.log.push({ send: JSON.parse(line) });
    this.inner.send(line);
  }

  onLine(handler: (line: string) => void): void {
    this.inner.onLine(handler);
  }

  onClose(handler: () => void): void {
    this.inner.onClose(handler);
  }

  close(): void {
    this.inner.close();
  }
}

const SCRIPT: { type: string; payload: Record<string, unknown> }[] = [
  { type: "project.load", payload: { path: "fixtures/flappy.mmproj" } },
  {
    type: "frame.set",
    payload: {
      index: 6,
      frame: {
        index: 6,
        input: { buttons: noButtons(), prevButtons: noButtons() },
        objects: [
          { id: 0, sprite: "bird", x: 2, y: 1, vx: 0, vy: 0, vxUserSet: false, vyUserSet: false },
          { id: 1, sprite: "longblock", x: 9, y: 0, vx: 0, vy: 0, vxUserSet: false, vyUserSet: false },
        ],
      },
    },
  },
  { type: "learn.run", payload: {} },
  { type: "predict.get", payload: { index: 3 } },
  { type: "predict.accept", payload: { index: 7 } },
  { type: "engine.export", payload: {} },
  { type: "play.start", payload: { frameIndex: 2, manual: true } },
  { type: "play.input", payload: { buttons: { space: true } } },
  { type: "play.input", payload: { buttons: {} } },
  { type: "play.stop", payload: {} },
  { type: "eval.run", payload: { fixture: "flappy" } },
];

async function runScript(): Promise<Entry[]> {
  const log: Entry[] = [];
  const inner = StdioTransport.spawn("python3", ["-m", "rulesmith", "serve", "--stdio"], REPO_ROOT);
  const transport = new RecordingTransport(inner, log);
  const client = new ProtocolClient(transport);
  let notifications = 0;
  client.onNotification(() => notifications++);
  try {
    for (const step of SCRIPT) {
      const before = notifications;
      await client.request(step.type, step.payload);
      if (step.type === "play.input") {
        // Manual play pushes one snapshot per input; wait for it so the
        // send/receive interleaving in the log is deterministic.
        const deadline = Date.now() + 10000;
        while (notifications <= before && Date.now() < deadline) {
          await new Promise((resolve) => setTimeout(resolve, 5));
        }
      }
    }
  } finally {
    client.close();
  }
  return log;
}

describe("protocol golden transcript", () => {
  it("matches the recorded session byte for byte", async () => {
    const log = await runScript();
    if (process.env.UPDATE_GOLDEN) {
      writeFileSync(GOLDEN_PATH, JSON.stringify(log, null, 2) + "\n");
      return;
    }
    const golden = JSON.parse(readFileSync(GOLDEN_PATH, "utf-8"));
    expect(log).toEqual(golden);
  });

  it("is reproducible across runs", async () => {
    const [a, b] = [await runScript(), await runScript()];
    expect(a).toEqual(b);
  });
});
