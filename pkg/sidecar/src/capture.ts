/**
 * Observed-value capture from the subject project's tests.
 *
 * Instrumentation wraps each target function rather than patching call
 * sites: the project module's TESTS table drives calls through the wrapper,
 * which records every (input, output) pair it sees.  Values are carrier
 * encoded through the validated source-side forward adapters and framed per
 * the harness protocol, alongside a manifest with the frame counts.  Method
 * receivers, when present, are encoded as the first input component.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { Adapters } from "./harness.js";
import { encodeFrames } from "./frames.js";

export interface TestCase {
  function: string;
  inputs: unknown[];
}

export interface ProjectModule {
  TESTS: TestCase[];
  [name: string]: unknown;
}

export interface CaptureManifest {
  function_id: string;
  inputs: string;
  outputs: string;
  input_count: number;
  output_count: number;
  note?: string;
}

export function captureValues(
  project: ProjectModule,
  functionIds: string[],
  adapters: Adapters,
  outDir: string,
): CaptureManifest[] {
  mkdirSync(outDir, { recursive: true });
  const manifests: CaptureManifest[] = [];
  for (const id of functionIds) {
    const original = project[id];
    if (typeof original !== "function") {
      throw new Error(`project does not define function ${id}`);
    }
    const inputs: unknown[] = [];
    const outputs: unknown[] = [];
    const wrapped = (value: unknown): unknown => {
      inputs.push(value);
      const result = (original as (v: unknown) => unknown)(value);
      outputs.push(result);
      return result;
    };
    for (const testCase of project.TESTS ?? []) {
      if (testCase.function !== id) continue;
      for (const input of testCase.inputs) {
        wrapped(input);
      }
    }
    const inputsFile = join(outDir, `${id}_inputs.bin`);
    const outputsFile = join(outDir, `${id}_outputs.bin`);
    writeFileSync(inputsFile, encodeFrames(inputs.map((v) => adapters.forward(v))));
    writeFileSync(outputsFile, encodeFrames(outputs.map((v) => adapters.forward(v))));
    const manifest: CaptureManifest = {
      function_id: id,
      inputs: inputsFile,
      outputs: outputsFile,
      input_count: inputs.length,
      output_count: outputs.length,
    };
    if (inputs.length === 0) {
      manifest.note = "no observations";
    }
    writeFileSync(join(outDir, `${id}.manifest.json`), JSON.stringify(manifest, null, 2));
    manifests.push(manifest);
  }
  return manifests;
}
