#!/usr/bin/env node
/**
 * Sidecar command line.
 *
 *   xcrate-sidecar extract-index --pkg <import-path>... [--godoc-dir <dir>] [--out <file>]
 *   xcrate-sidecar harness <roundtrip|execute> --adapters <module>
 *       [--function <name> --module <project module>] [--out-adapters <module>]
 *   xcrate-sidecar capture --project <module> --function <id>...
 *       --adapters <module> --out-dir <dir>
 *
 * extract-index parses `go doc -all` output: from pinned fixture files when
 * --godoc-dir is given (file name is the import path with slashes replaced
 * by underscores), otherwise from the live tool.
 */

import { spawnSync } from "node:child_process";
import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";

import { GoApiEntry, parseGoDoc, uniqueEntries } from "./godoc.js";
import { readAllFrames } from "./frames.js";
import { Adapters, runExecute, runRoundtrip } from "./harness.js";
import { captureValues, ProjectModule } from "./capture.js";

interface Flags {
  positional: string[];
  single: Map<string, string>;
  multi: Map<string, string[]>;
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = { positional: [], single: new Map(), multi: new Map() };
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    if (!arg.startsWith("--")) {
      flags.positional.push(arg);
      continue;
    }
    const key = arg.slice(2);
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) {
      throw new Error(`flag --${key} needs a value`);
    }
    i += 1;
    flags.single.set(key, value);
    const bucket = flags.multi.get(key) ?? [];
    bucket.push(value);
    flags.multi.set(key, bucket);
  }
  return flags;
}

function godocText(pkg: string, godocDir: string | undefined): string {
  if (godocDir !== undefined) {
    const file = join(godocDir, pkg.replace(/\//g, "_") + ".txt");
    return readFileSync(file, "utf8");
  }
  const result = spawnSync("go", ["doc", "-all", pkg], { encoding: "utf8" });
  if (result.error || result.status !== 0) {
    throw new Error(
      `go doc failed for ${pkg}: ${result.stderr ?? result.error?.message ?? "unknown"}`,
    );
  }
  return result.stdout;
}

function extractIndex(flags: Flags): number {
  const packages = flags.multi.get("pkg") ?? [];
  const entries: GoApiEntry[] = [];
  for (const pkg of packages) {
    entries.push(...parseGoDoc(godocText(pkg, flags.single.get("godoc-dir"))));
  }
  const index = uniqueEntries(entries);
  const payload = JSON.stringify(index, null, 2);
  const out = flags.single.get("out");
  if (out !== undefined) {
    writeFileSync(out, payload);
  } else {
    process.stdout.write(payload + "\n");
  }
  return 0;
}

async function importModule<T>(path: string): Promise<T> {
  return (await import(pathToFileURL(path).href)) as T;
}

async function harness(flags: Flags): Promise<number> {
  const mode = flags.positional[0];
  if (mode !== "roundtrip" && mode !== "execute") {
    process.stderr.write(`unknown harness mode: ${mode}\n`);
    return 1;
  }
  const adaptersPath = flags.single.get("adapters");
  if (adaptersPath === undefined) {
    process.stderr.write("harness requires --adapters\n");
    return 1;
  }
  const adapters = await importModule<Adapters>(adaptersPath);
  const frames = await readAllFrames(process.stdin);
  if (mode === "roundtrip") {
    return runRoundtrip(adapters, frames, process.stdout, process.stderr);
  }
  const fnName = flags.single.get("function");
  const modulePath = flags.single.get("module");
  if (fnName === undefined || modulePath === undefined) {
    process.stderr.write("execute mode requires --function and --module\n");
    return 1;
  }
  const project = await importModule<Record<string, unknown>>(modulePath);
  const fn = project[fnName];
  if (typeof fn !== "function") {
    process.stderr.write(`module does not define function ${fnName}\n`);
    return 1;
  }
  const outPath = flags.single.get("out-adapters");
  const outAdapters = outPath === undefined ? adapters : await importModule<Adapters>(outPath);
  return runExecute(fn as (v: unknown) => unknown, adapters, outAdapters, frames, process.stdout);
}

async function capture(flags: Flags): Promise<number> {
  const projectPath = flags.single.get("project");
  const adaptersPath = flags.single.get("adapters");
  const outDir = flags.single.get("out-dir");
  const functions = flags.multi.get("function") ?? [];
  if (!projectPath || !adaptersPath || !outDir || functions.length === 0) {
    process.stderr.write(
      "capture requires --project, --adapters, --out-dir and at least one --function\n",
    );
    return 1;
  }
  const project = await importModule<ProjectModule>(projectPath);
  const adapters = await importModule<Adapters>(adaptersPath);
  const manifests = captureValues(project, functions, adapters, outDir);
  process.stdout.write(JSON.stringify(manifests, null, 2) + "\n");
  return 0;
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  try {
    const flags = parseFlags(rest);
    if (command === "extract-index") return extractIndex(flags);
    if (command === "harness") return await harness(flags);
    if (command === "capture") return await capture(flags);
    process.stderr.write(
      "usage: xcrate-sidecar <extract-index|harness|capture> ...\n",
    );
    return 1;
  } catch (error) {
    process.stderr.write(`${(error as Error).message}\n`);
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
