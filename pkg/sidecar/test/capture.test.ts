import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { pathToFileURL } from "node:url";

import { describe, expect, test } from "vitest";

import { captureValues, ProjectModule } from "../src/capture.js";
import { decodeFrames } from "../src/frames.js";
import { Adapters } from "../src/harness.js";

const ROOT = join(__dirname, "..");
const PROJECT = join(ROOT, "fixtures", "project", "funcs.mjs");
const IDENTITY = join(ROOT, "fixtures", "adapters", "identity.mjs");

async function loadFixtures(): Promise<{ project: ProjectModule; adapters: Adapters }> {
  const project = (await import(pathToFileURL(PROJECT).href)) as ProjectModule;
  const adapters = (await import(pathToFileURL(IDENTITY).href)) as Adapters;
  return { project, adapters };
}

describe("value capture", () => {
  test("a function exercised by three tests captures 3/3 frames", async () => {
    const { project, adapters } = await loadFixtures();
    const outDir = mkdtempSync(join(tmpdir(), "capture-"));
    const [manifest] = captureValues(project, ["hashSeed"], adapters, outDir);
    expect(manifest.input_count).toBe(3);
    expect(manifest.output_count).toBe(3);
    expect(manifest.note).toBeUndefined();
    expect(decodeFrames(readFileSync(manifest.inputs)).length).toBe(3);
    const outputs = decodeFrames(readFileSync(manifest.outputs));
    expect(outputs.length).toBe(3);
    for (const frame of outputs) {
      expect(frame.length).toBe(32);
    }
  });

  test("a function never called by tests is flagged", async () => {
    const { project, adapters } = await loadFixtures();
    const outDir = mkdtempSync(join(tmpdir(), "capture-"));
    const [manifest] = captureValues(project, ["stretchSeed"], adapters, outDir);
    expect(manifest.input_count).toBe(0);
    expect(manifest.note).toBe("no observations");
  });

  test("execute mode reproduces the captured outputs byte for byte", async () => {
    const { project, adapters } = await loadFixtures();
    const outDir = mkdtempSync(join(tmpdir(), "capture-"));
    const [manifest] = captureValues(project, ["hashSeed"], adapters, outDir);
    const result = spawnSync(
      "node",
      [
        join(ROOT, "dist", "cli.js"),
        "harness",
        "execute",
        "--adapters",
        IDENTITY,
        "--function",
        "hashSeed",
        "--module",
        PROJECT,
      ],
      { input: readFileSync(manifest.inputs) },
    );
    expect(result.status).toBe(0);
    expect(result.stdout.equals(readFileSync(manifest.outputs))).toBe(true);
  });

  test("unknown function is rejected", async () => {
    const { project, adapters } = await loadFixtures();
    const outDir = mkdtempSync(join(tmpdir(), "capture-"));
    expect(() => captureValues(project, ["missing"], adapters, outDir)).toThrow(
      /does not define/,
    );
  });
});
