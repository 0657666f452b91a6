/**
 * Harness protocol implementation for the source side.
 *
 * Reads carrier-encoded value frames on stdin and writes result frames on
 * stdout.  Exit code 0 means the run completed, 2 means the checked property
 * was violated (the frame index is reported on stderr), anything else is a
 * harness error.
 *
 * Adapter modules export `forward(value): Uint8Array` (native value to
 * carrier bytes) and `backward(frame: Uint8Array): unknown` (carrier bytes to
 * native value); function modules export the functions under test by name.
 */

import { Writable } from "node:stream";

export interface Adapters {
  forward(value: unknown): Uint8Array;
  backward(frame: Uint8Array): unknown;
}

export function deepEqual(a: unknown, b: unknown): boolean {
  if (a instanceof Uint8Array && b instanceof Uint8Array) {
    return Buffer.from(a).equals(Buffer.from(b));
  }
  if (Array.isArray(a) && Array.isArray(b)) {
    return a.length === b.length && a.every((x, i) => deepEqual(x, b[i]));
  }
  if (a !== null && b !== null && typeof a === "object" && typeof b === "object") {
    const ka = Object.keys(a as object).sort();
    const kb = Object.keys(b as object).sort();
    return (
      ka.length === kb.length &&
      ka.every(
        (k, i) =>
          k === kb[i] &&
          deepEqual((a as Record<string, unknown>)[k], (b as Record<string, unknown>)[k]),
      )
    );
  }
  return a === b;
}

import { encodeFrame } from "./frames.js";

/** backward-forward-backward identity check on every frame. */
export function runRoundtrip(
  adapters: Adapters,
  frames: Buffer[],
  stdout: Writable,
  stderr: Writable,
): number {
  for (let i = 0; i < frames.length; i += 1) {
    const native = adapters.backward(frames[i]);
    const carried = adapters.forward(native);
    const recovered = adapters.backward(carried);
    if (!deepEqual(native, recovered)) {
      stderr.write(`frame ${i}\n`);
      return 2;
    }
    stdout.write(encodeFrame(carried));
  }
  return 0;
}

/** Apply the function under test to each decoded input; one frame out per frame in. */
export function runExecute(
  fn: (value: unknown) => unknown,
  inAdapters: Adapters,
  outAdapters: Adapters,
  frames: Buffer[],
  stdout: Writable,
): number {
  for (const frame of frames) {
    const result = fn(inAdapters.backward(frame));
    stdout.write(encodeFrame(outAdapters.forward(result)));
  }
  return 0;
}
