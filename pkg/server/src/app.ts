import express, { Express, NextFunction, Request, Response } from "express";
import { z } from "zod";

import { ModelClient } from "./model";

export interface ServerConfig {
  maxConcurrent: number;
  queueLimit: number;
  /** Upper bound on the decoded inline image, bytes. */
  maxImageBytes: number;
}

export const DEFAULT_CONFIG: ServerConfig = {
  maxConcurrent: 1,
  queueLimit: 16,
  maxImageBytes: 8 * 1024 * 1024,
};

const answerRequestSchema = z
  .object({
    context: z.string(),
    question: z.string().min(1),
    question_id: z.string().min(1),
    image: z.string().optional(),
    image_id: z.string().optional(),
  })
  .refine((body) => body.image !== undefined || body.image_id !== undefined, {
    message: "either image or image_id is required",
  });

/** Bounded gate: at most maxConcurrent requests run, at most queueLimit wait. */
class InferenceGate {
  private active = 0;
  private readonly waiting: Array<() => void> = [];

  constructor(private readonly maxConcurrent: number, private readonly queueLimit: number) {}

  acquire(): Promise<void> | null {
    if (this.active < this.maxConcurrent) {
      this.active += 1;
      return Promise.resolve();
    }
    if (this.waiting.length >= this.queueLimit) {
      return null;
    }
    return new Promise((resolve) => {
      this.waiting.push(() => {
        this.active += 1;
        resolve();
      });
    });
  }

  release(): void {
    this.active -= 1;
    const next = this.waiting.shift();
    if (next) {
      next();
    }
  }
}

export function createApp(client: ModelClient, config: ServerConfig = DEFAULT_CONFIG): Express {
  const app = express();
  // generous JSON limit; the precise image bound is checked after decoding
  app.use(express.json({ limit: Math.ceil(config.maxImageBytes * 1.5) }));
  const gate = new InferenceGate(config.maxConcurrent, config.queueLimit);

  app.get("/v1/health", (_req: Request, res: Response) => {
    res.json({ status: "ok", model_id: client.modelId });
  });

  app.post("/v1/answer", async (req: Request, res: Response) => {
    const parsed = answerRequestSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: parsed.error.issues[0].message });
      return;
    }
    const body = parsed.data;
    if (body.image !== undefined) {
      const decodedBytes = Math.floor((body.image.length * 3) / 4);
      if (decodedBytes > config.maxImageBytes) {
        res.status(413).json({ error: `image exceeds ${config.maxImageBytes} bytes` });
        return;
      }
    }

    const slot = gate.acquire();
    if (slot === null) {
      res.status(503).json({ error: "model busy, queue full" });
      return;
    }
    await slot;
    try {
      const payload = await client.answer({
        context: body.context,
        question: body.question,
        questionId: body.question_id,
        imageBase64: body.image,
        imageId: body.image_id,
      });
      res.json(payload);
    } catch (error) {
      res.status(502).json({ error: error instanceof Error ? error.message : "inference failed" });
    } finally {
      gate.release();
    }
  });

  // body-parser failures (bad JSON, oversized payload) become JSON errors
  app.use((error: Error & { type?: string }, _req: Request, res: Response, next: NextFunction) => {
    if (error.type === "entity.too.large") {
      res.status(413).json({ error: "request body too large" });
      return;
    }
    if (error.type === "entity.parse.failed") {
      res.status(400).json({ error: "request body is not valid JSON" });
      return;
    }
    next(error);
  });

  return app;
}
