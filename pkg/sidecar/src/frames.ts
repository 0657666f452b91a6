/**
 * Length-prefixed binary framing: 4-byte big-endian length, then payload.
 * The same layout the validation side speaks on harness stdin/stdout and in
 * observed-value files.
 */

import { Readable, Writable } from "node:stream";

export function encodeFrame(payload: Uint8Array): Buffer {
  const header = Buffer.alloc(4);
  header.writeUInt32BE(payload.length, 0);
  return Buffer.concat([header, Buffer.from(payload)]);
}

export function encodeFrames(payloads: Uint8Array[]): Buffer {
  return Buffer.concat(payloads.map(encodeFrame));
}

export function decodeFrames(data: Buffer): Buffer[] {
  const frames: Buffer[] = [];
  let pos = 0;
  while (pos < data.length) {
    if (pos + 4 > data.length) {
      throw new Error("truncated frame header");
    }
    const size = data.readUInt32BE(pos);
    pos += 4;
    if (pos + size > data.length) {
      throw new Error("truncated frame payload");
    }
    frames.push(data.subarray(pos, pos + size));
    pos += size;
  }
  return frames;
}

export async function readAllFrames(stream: Readable): Promise<Buffer[]> {
  const chunks: Buffer[] = [];
  for await (const chunk of stream) {
    chunks.push(Buffer.from(chunk));
  }
  return decodeFrames(Buffer.concat(chunks));
}

export function writeFrame(stream: Writable, payload: Uint8Array): void {
  stream.write(encodeFrame(payload));
}
