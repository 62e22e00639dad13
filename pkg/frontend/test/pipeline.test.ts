// Runs the corposcope profiler against this service and checks the artifact
// is schema-identical to a builtin-provider run (values differ, shapes not).

import { execFile } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { promisify } from "node:util";
import type { Server } from "node:http";
import type { AddressInfo } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { createApp } from "../src/app.js";
import { loadEmbedder } from "../src/embedder.js";

let server: Server;
let base: string;
let workdir: string;

beforeAll(async () => {
  const app = createApp(loadEmbedder("hash-ngram-v1-small"));
  await new Promise<void>((resolve) => {
    server = app.listen(0, "127.0.0.1", resolve);
  });
  const { port } = server.address() as AddressInfo;
  base = `http://127.0.0.1:${port}`;
  workdir = mkdtempSync(join(tmpdir(), "embed-service-it-"));
  const lines = [
    "alpha beta gamma delta",
    "epsilon zeta eta theta iota",
    "kappa lambda mu nu",
    "alpha gamma epsilon eta",
    "xi omicron pi rho sigma",
    "tau upsilon phi chi",
    "psi omega alpha beta",
    "gamma delta epsilon zeta",
  ];
  writeFileSync(
    join(workdir, "tiny.jsonl"),
    lines.map((text) => JSON.stringify({ text })).join("\n") + "\n",
  );
});

afterAll(() => {
  rmSync(workdir, { recursive: true, force: true });
  return new Promise<void>((resolve) => server.close(() => resolve()));
});

const execFileAsync = promisify(execFile);

// async so the in-process express server keeps serving while python runs
async function runProfiler(outName: string, embedderArgs: string[]) {
  const out = join(workdir, outName);
  await execFileAsync("python3", [
    "-m", "corposcope.cli", "profile",
    "--input", join(workdir, "tiny.jsonl"),
    "--lang", "en",
    "--dataset-id", "tiny",
    "--sample", "0",
    "--per-sample",
    "--kmeans-k", "2",
    "--out", out,
    ...embedderArgs,
  ]);
  return JSON.parse(readFileSync(out, "utf-8"));
}

function shape(doc: unknown): unknown {
  if (Array.isArray(doc)) {
    return { array: doc.length, first: doc.length ? shape(doc[0]) : null };
  }
  if (doc !== null && typeof doc === "object") {
    return Object.fromEntries(
      Object.entries(doc as Record<string, unknown>)
        .sort(([a], [b]) => (a < b ? -1 : 1))
        .map(([k, v]) => [k, shape(v)]),
    );
  }
  return doc === null ? "number|null" : typeof doc === "number" ? "number|null" : typeof doc;
}

describe("primary pipeline against the service", () => {
  it("produces schema-identical artifacts to builtin-provider runs", { timeout: 120_000 }, async () => {
    const viaHttp = await runProfiler("http_profile.json", [
      "--embedder", "http",
      "--embedder-url", base,
    ]);
    const viaBuiltin = await runProfiler("builtin_profile.json", ["--embedder", "builtin"]);

    expect(viaHttp.schema_version).toBe(viaBuiltin.schema_version);
    expect(Object.keys(viaHttp).sort()).toEqual(Object.keys(viaBuiltin).sort());
    expect(Object.keys(viaHttp.metrics).sort()).toEqual(Object.keys(viaBuiltin.metrics).sort());
    expect(viaHttp.per_sample.columns).toEqual(viaBuiltin.per_sample.columns);
    expect(viaHttp.per_sample.ids).toEqual(viaBuiltin.per_sample.ids);
    expect(shape(viaHttp.metrics)).toEqual(shape(viaBuiltin.metrics));
    expect(shape(viaHttp.per_sample)).toEqual(shape(viaBuiltin.per_sample));
    // the two providers see the same corpus: lexical metrics agree exactly,
    // embedding-derived values merely stay in range
    expect(viaHttp.metrics.ttr).toBe(viaBuiltin.metrics.ttr);
    expect(viaHttp.metrics.cos_embed).toBeGreaterThanOrEqual(-1);
    expect(viaHttp.metrics.cos_embed).toBeLessThanOrEqual(1);
  });
});
