import { spawnSync } from "node:child_process";
import { join } from "node:path";

import { describe, expect, test } from "vitest";

import { decodeFrames, encodeFrames } from "../src/frames.js";

const ROOT = join(__dirname, "..");
const CLI = join(ROOT, "dist", "cli.js");
const ADAPTERS = join(ROOT, "fixtures", "adapters");
const PROJECT = join(ROOT, "fixtures", "project", "funcs.mjs");

function runCli(args: string[], input: Buffer) {
  return spawnSync("node", [CLI, ...args], { input });
}

const FRAMES = [Buffer.from("abc"), Buffer.from("0123456789")];

describe("harness protocol conformance", () => {
  test("roundtrip with identity adapters exits 0 and echoes frames", () => {
    const result = runCli(
      ["harness", "roundtrip", "--adapters", join(ADAPTERS, "identity.mjs")],
      encodeFrames(FRAMES),
    );
    expect(result.status).toBe(0);
    const out = decodeFrames(result.stdout);
    expect(out.length).toBe(FRAMES.length);
    expect(out[0].equals(FRAMES[0])).toBe(true);
  });

  test("roundtrip with a lossy adapter exits 2 with the frame index", () => {
    const result = runCli(
      ["harness", "roundtrip", "--adapters", join(ADAPTERS, "lossy.mjs")],
      encodeFrames(FRAMES),
    );
    expect(result.status).toBe(2);
    expect(result.stderr.toString()).toContain("frame 0");
  });

  test("execute mode preserves the frame count", () => {
    const result = runCli(
      [
        "harness",
        "execute",
        "--adapters",
        join(ADAPTERS, "identity.mjs"),
        "--function",
        "stretchSeed",
        "--module",
        PROJECT,
      ],
      encodeFrames(FRAMES),
    );
    expect(result.status).toBe(0);
    const out = decodeFrames(result.stdout);
    expect(out.length).toBe(FRAMES.length);
    expect(out[0].toString()).toBe("abcabc");
  });

  test("missing adapter module is a harness error, not a violation", () => {
    const result = runCli(
      ["harness", "roundtrip", "--adapters", join(ADAPTERS, "nope.mjs")],
      encodeFrames(FRAMES),
    );
    expect(result.status).not.toBe(0);
    expect(result.status).not.toBe(2);
  });

  test("unknown mode is rejected", () => {
    const result = runCli(["harness", "sideways"], Buffer.alloc(0));
    expect(result.status).toBe(1);
  });
});

describe("extract-index command", () => {
  test("emits the neutral JSON index for pinned packages", () => {
    const result = runCli(
      [
        "extract-index",
        "--pkg",
        "crypto/sha512",
        "--pkg",
        "crypto/ed25519",
        "--godoc-dir",
        join(ROOT, "fixtures", "godoc"),
      ],
      Buffer.alloc(0),
    );
    expect(result.status).toBe(0);
    const index = JSON.parse(result.stdout.toString());
    const names = new Set(index.map((e: { name: string }) => e.name));
    expect(names.has("New")).toBe(true);
    expect(names.has("PrivateKey.Seed")).toBe(true);
    for (const entry of index) {
      expect(entry.doc.length).toBeGreaterThan(0);
    }
  });
});
