/**
 * Minimal WebSocket (RFC 6455) text framing for the local bridge: handshake
 * accept key, server-to-client frame encoding, and client-to-server frame
 * decoding with masking and continuation support.  Text and control frames
 * only; no extensions.
 */

import { createHash } from "node:crypto";

const GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

export const OP_CONTINUATION = 0x0;
export const OP_TEXT = 0x1;
export const OP_CLOSE = 0x8;
export const OP_PING = 0x9;
export const OP_PONG = 0xa;

export function acceptKey(secWebSocketKey: string): string {
  return createHash("sha1").update(secWebSocketKey + GUID).digest("base64");
}

export function encodeFrame(payload: Buffer, opcode: number = OP_TEXT): Buffer {
  const length = payload.length;
  let header: Buffer;
  if (length < 126) {
    header = Buffer.from([0x80 | opcode, length]);
  } else if (length < 65536) {
    header = Buffer.alloc(4);
    header[0] = 0x80 | opcode;
    header[1] = 126;
    header.writeUInt16BE(length, 2);
  } else {
    header = Buffer.alloc(10);
    header[0] = 0x80 | opcode;
    header[1] = 127;
    header.writeBigUInt64BE(BigInt(length), 2);
  }
  return Buffer.concat([header, payload]);
}

export function encodeTextFrame(text: string): Buffer {
  return encodeFrame(Buffer.from(text, "utf-8"), OP_TEXT);
}

export interface WsFrame {
  opcode: number;
  fin: boolean;
  payload: Buffer;
}

/** Pull complete frames off the front of a buffer; returns the remainder. */
export function decodeFrames(buffer: Buffer): { frames: WsFrame[]; rest: Buffer } {
  const frames: WsFrame[] = [];
  let offset = 0;
  while (buffer.length - offset >= 2) {
    const first = buffer[offset];
    const second = buffer[offset + 1];
    const fin = (first & 0x80) !== 0;
    const opcode = first & 0x0f;
    const masked = (second & 0x80) !== 0;
    let length = second & 0x7f;
    let cursor = offset + 2;
    if (length === 126) {
      if (buffer.length - cursor < 2) break;
      length = buffer.readUInt16BE(cursor);
      cursor += 2;
    } else if (length === 127) {
      if (buffer.length - cursor < 8) break;
      length = Number(buffer.readBigUInt64BE(cursor));
      cursor += 8;
    }
    let mask: Buffer | null = null;
    if (masked) {
      if (buffer.length - cursor < 4) break;
      mask = buffer.subarray(cursor, cursor + 4);
      cursor += 4;
    }
    if (buffer.length - cursor < length) break;
    let payload = Buffer.from(buffer.subarray(cursor, cursor + length));
    if (mask) {
      for (let i = 0; i < payload.length; i++) payload[i] ^= mask[i % 4];
    }
    frames.push({ opcode, fin, payload });
    offset = cursor + length;
  }
  return { frames, rest: Buffer.from(buffer.subarray(offset)) };
}

/** Reassembles fragmented messages into complete text payloads. */
export class MessageAssembler {
  private parts: Buffer[] = [];

  push(frame: WsFrame): string | null {
    if (frame.opcode === OP_TEXT || frame.opcode === OP_CONTINUATION) {
      this.parts.push(frame.payload);
      if (!frame.fin) return null;
      const text = Buffer.concat(this.parts).toString("utf-8");
      this.parts = [];
      return text;
    }
    return null;
  }
}
