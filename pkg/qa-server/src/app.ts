// The HTTP surface: POST /qa, POST /encode, GET /health.
//
// Invalid request bodies get a 400 with a JSON error; anything an engine
// throws while answering gets a 500 with a JSON error. Engines are pure
// functions of their input, so concurrent requests need no locking.

import express, { type Express, type NextFunction, type Request, type Response } from "express";

import type { Encoder, QaModel } from "./engines.js";
import { describeIssues, encodeRequestSchema, qaRequestSchema } from "./protocol.js";

function errorMessage(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

function clamp01(value: number): number {
  if (!Number.isFinite(value)) {
    return 0;
  }
  return Math.min(1, Math.max(0, value));
}

export function createApp(model: QaModel, encoder: Encoder): Express {
  const app = express();
  app.use(express.json({ limit: "1mb" }));

  app.get("/health", (_req: Request, res: Response) => {
    res.json({ status: "ok", model: model.id });
  });

  app.post("/qa", (req: Request, res: Response) => {
    const parsed = qaRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: describeIssues(parsed.error) });
      return;
    }
    try {
      const span = model.extract(parsed.data.context, parsed.data.question);
      res.json({
        answer: span.answer,
        score: clamp01(span.score),
        start: span.start,
        end: span.end,
      });
    } catch (err) {
      res.status(500).json({ error: errorMessage(err) });
    }
  });

  app.post("/encode", (req: Request, res: Response) => {
    const parsed = encodeRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: describeIssues(parsed.error) });
      return;
    }
    try {
      const vector = encoder.encode(parsed.data.text);
      res.json({ vector, dim: vector.length });
    } catch (err) {
      res.status(500).json({ error: errorMessage(err) });
    }
  });

  // Body-parser failures (malformed JSON, oversized payloads) carry their
  // own status; anything else is a server-side fault.
  app.use((err: unknown, _req: Request, res: Response, _next: NextFunction) => {
    const status =
      typeof err === "object" && err !== null && "status" in err && typeof err.status === "number"
        ? err.status
        : 500;
    res.status(status).json({ error: errorMessage(err) });
  });

  return app;
}
