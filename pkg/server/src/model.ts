export interface AnswerRequest {
  context: string;
  question: string;
  questionId: string;
  imageBase64?: string;
  imageId?: string;
}

export interface AnswerPayload {
  answer_text: string;
  confidence?: number;
  embedding?: number[];
  model_id: string;
}

export interface ModelClient {
  readonly modelId: string;
  answer(request: AnswerRequest): Promise<AnswerPayload>;
}

/** Deterministic stand-in used for every integration test: same reply, always. */
export class EchoClient implements ModelClient {
  readonly modelId = "echo";

  constructor(private readonly reply: string) {}

  async answer(_request: AnswerRequest): Promise<AnswerPayload> {
    return { answer_text: this.reply, confidence: 1.0, model_id: this.modelId };
  }
}

export interface OllamaOptions {
  upstreamUrl: string;
  model: string;
  /** Pinned for reproducible binary answers: greedy decoding, few new tokens. */
  numPredict?: number;
  timeoutMs?: number;
}

/**
 * Forwards context+question+image to a local Ollama-compatible runtime, which
 * holds the actual model weights. Decoding is pinned to temperature 0 with a
 * small token budget so answers stay terse and reproducible.
 */
export class OllamaClient implements ModelClient {
  readonly modelId: string;
  private readonly upstreamUrl: string;
  private readonly numPredict: number;
  private readonly timeoutMs: number;

  constructor(options: OllamaOptions) {
    this.modelId = options.model;
    this.upstreamUrl = options.upstreamUrl.replace(/\/$/, "");
    this.numPredict = options.numPredict ?? 8;
    this.timeoutMs = options.timeoutMs ?? 120_000;
  }

  async answer(request: AnswerRequest): Promise<AnswerPayload> {
    const body: Record<string, unknown> = {
      model: this.modelId,
      prompt: `${request.context}\n${request.question}`,
      stream: false,
      options: { temperature: 0, num_predict: this.numPredict },
    };
    if (request.imageBase64) {
      body.images = [request.imageBase64];
    }
    const response = await fetch(`${this.upstreamUrl}/api/generate`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal: AbortSignal.timeout(this.timeoutMs),
    });
    if (!response.ok) {
      throw new Error(`model runtime returned ${response.status}`);
    }
    const payload = (await response.json()) as { response?: string };
    if (typeof payload.response !== "string") {
      throw new Error("model runtime response missing text");
    }
    return { answer_text: payload.response, model_id: this.modelId };
  }
}
