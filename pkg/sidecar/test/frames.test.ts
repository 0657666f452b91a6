import { describe, expect, test } from "vitest";

import { decodeFrames, encodeFrame, encodeFrames } from "../src/frames.js";

describe("length-prefixed framing", () => {
  test("round trips a mixed batch", () => {
    const payloads = [Buffer.alloc(0), Buffer.from("x"), Buffer.from("longer payload")];
    const decoded = decodeFrames(encodeFrames(payloads));
    expect(decoded.map((b) => b.toString())).toEqual(payloads.map((b) => b.toString()));
  });

  test("header is 4-byte big-endian", () => {
    const frame = encodeFrame(Buffer.from("abc"));
    expect([...frame.subarray(0, 4)]).toEqual([0, 0, 0, 3]);
  });

  test("truncated payload rejected", () => {
    const bad = Buffer.from([0, 0, 0, 5, 97, 98]);
    expect(() => decodeFrames(bad)).toThrow(/truncated/);
  });

  test("truncated header rejected", () => {
    expect(() => decodeFrames(Buffer.from([0, 0]))).toThrow(/truncated/);
  });
});
