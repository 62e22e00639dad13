#!/usr/bin/env node
// embed-service --model hash-ngram-v1 --port 8765 [--dim 256] [--host 0.0.0.0]

import { createApp } from "./app.js";
import { loadEmbedder } from "./embedder.js";

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) {
      throw new Error(`unexpected argument: ${arg}`);
    }
    const key = arg.slice(2);
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) {
      throw new Error(`flag --${key} needs a value`);
    }
    out[key] = value;
    i++;
  }
  return out;
}

function main(): void {
  let args: Record<string, string>;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(`embed-service: ${(err as Error).message}`);
    console.error("usage: embed-service --model <name> --port <port> [--dim <n>] [--host <addr>]");
    process.exit(1);
  }
  const model = args.model ?? "hash-ngram-v1";
  const port = Number(args.port ?? "8765");
  const host = args.host ?? "127.0.0.1";
  const dim = args.dim !== undefined ? Number(args.dim) : undefined;

  const embedder = loadEmbedder(model, dim);
  const app = createApp(embedder);
  const server = app.listen(port, host, () => {
    console.log(`embed-service: model=${embedder.model} dim=${embedder.dim} listening on http://${host}:${port}`);
  });

  const shutdown = () => server.close(() => process.exit(0));
  process.on("SIGINT", shutdown);
  process.on("SIGTERM", shutdown);
}

main();
