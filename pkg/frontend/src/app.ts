import express, { type Express, type NextFunction, type Request, type Response } from "express";

import type { Embedder } from "./embedder.js";

export const MAX_BATCH = 64;

// Wire protocol:
//   POST /embed  {"texts": [string, ...]}  (<= 64 per call)
//     -> 200 {"vectors": [[number, ...], ...], "dim": number}
//     -> 400 malformed JSON / wrong shape, 413 oversized batch, 500 model failure
//   GET /health -> {"model": string, "dim": number}
export function createApp(embedder: Embedder): Express {
  const app = express();
  app.use(express.json({ limit: "16mb" }));

  app.get("/health", (_req: Request, res: Response) => {
    res.json({ model: embedder.model, dim: embedder.dim });
  });

  app.post("/embed", (req: Request, res: Response, next: NextFunction) => {
    const body = req.body;
    if (body === null || typeof body !== "object" || !Array.isArray(body.texts)) {
      res.status(400).json({ error: "body must be {\"texts\": [string, ...]}" });
      return;
    }
    const texts: unknown[] = body.texts;
    if (texts.length > MAX_BATCH) {
      res.status(413).json({ error: `batch too large: ${texts.length} > ${MAX_BATCH}` });
      return;
    }
    if (!texts.every((t) => typeof t === "string")) {
      res.status(400).json({ error: "texts must all be strings" });
      return;
    }
    try {
      const vectors = (texts as string[]).map((t) => embedder.embed(t));
      res.json({ vectors, dim: embedder.dim });
    } catch (err) {
      next(err);
    }
  });

  // body-parser JSON syntax errors arrive here; everything else is a 500
  app.use((err: Error, _req: Request, res: Response, _next: NextFunction) => {
    if (err instanceof SyntaxError) {
      res.status(400).json({ error: "malformed JSON body" });
      return;
    }
    res.status(500).json({ error: err.message });
  });

  return app;
}
