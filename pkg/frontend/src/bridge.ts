/**
 * Local development bridge: serves the editor's static files over HTTP and
 * relays WebSocket text messages verbatim to a spawned backend session
 * (`serve --stdio`), one protocol line per message.
 *
 *   node dist/bridge.js [--port 8765] [--project ../fixtures/flappy.mmproj]
 *       [--backend "python3 -m rulesmith"]
 */

import { spawn } from "node:child_process";
import { readFile } from "node:fs/promises";
import { createServer } from "node:http";
import { dirname, extname, join, normalize } from "node:path";
import { fileURLToPath } from "node:url";

import { LineCodec } from "./protocol.js";
import {
  MessageAssembler,
  OP_CLOSE,
  OP_PING,
  OP_PONG,
  acceptKey,
  decodeFrames,
  encodeFrame,
  encodeTextFrame,
} from "./wsframes.js";

const HERE = dirname(fileURLToPath(import.meta.url));
const WEB_ROOT = join(HERE, "..");
const MIME: Record<string, string> = {
  ".html": "text/html; charset=utf-8",
  ".js": "text/javascript; charset=utf-8",
  ".css": "text/css; charset=utf-8",
  ".json": "application/json",
};

function argValue(flag: string, fallback: string): string {
  const index = process.argv.indexOf(flag);
  return index >= 0 && process.argv[index + 1] ? process.argv[index + 1] : fallback;
}

const port = Number(argValue("--port", "8765"));
const project = argValue("--project", join(WEB_ROOT, "..", "fixtures", "flappy.mmproj"));
const backendCmd = argValue("--backend", "python3 -m rulesmith").split(" ");

const server = createServer(async (request, response) => {
  if (request.url === "/config.json") {
    response.writeHead(200, { "content-type": "application/json" });
    response.end(JSON.stringify({ projectPath: project }));
    return;
  }
  const path = request.url === "/" ? "/index.html" : (request.url ?? "/index.html");
  const file = normalize(join(WEB_ROOT, path));
  if (!file.startsWith(WEB_ROOT)) {
    response.writeHead(403).end();
    return;
  }
  try {
    const body = await readFile(file);
    response.writeHead(200, { "content-type": MIME[extname(file)] ?? "application/octet-stream" });
    response.end(body);
  } catch {
    response.writeHead(404).end("not found");
  }
});

server.on("upgrade", (request, socket) => {
  const key = request.headers["sec-websocket-key"];
  if (typeof key !== "string") {
    socket.destroy();
    return;
  }
  socket.write(
    "HTTP/1.1 101 Switching Protocols\r\n" +
      "Upgrade: websocket\r\n" +
      "Connection: Upgrade\r\n" +
      `Sec-WebSocket-Accept: ${acceptKey(key)}\r\n\r\n`,
  );

  const child = spawn(backendCmd[0], [...backendCmd.slice(1), "serve", "--stdio", "--project", project], {
    stdio: ["pipe", "pipe", "inherit"],
  });
  const codec = new LineCodec();
  child.stdout.setEncoding("utf-8");
  child.stdout.on("data", (chunk: string) => {
    for (const line of codec.feed(chunk)) {
      socket.write(encodeTextFrame(line));
    }
  });
  child.on("exit", () => socket.end());

  let pending: Buffer = Buffer.alloc(0);
  const assembler = new MessageAssembler();
  socket.on("data", (chunk: Buffer) => {
    const { frames, rest } = decodeFrames(Buffer.concat([pending, chunk]));
    pending = rest;
    for (const frame of frames) {
      if (frame.opcode === OP_CLOSE) {
        socket.end(encodeFrame(frame.payload, OP_CLOSE));
        return;
      }
      if (frame.opcode === OP_PING) {
        socket.write(encodeFrame(frame.payload, OP_PONG));
        continue;
      }
      const message = assembler.push(frame);
      if (message !== null) {
        for (const line of message.split("\n")) {
          if (line.trim()) child.stdin.write(line + "\n");
        }
      }
    }
  });
  const shutdown = () => child.kill();
  socket.on("close", shutdown);
  socket.on("error", shutdown);
});

server.listen(port, () => {
  console.log(`editor at http://localhost:${port}/ (project: ${project})`);
});
