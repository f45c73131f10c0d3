/** Thin typed client for the tinydigits service. */

import { SseParser, type SseEvent } from "./sse.js";
import type {
  ApiErrorBody,
  DatasetDocument,
  DatasetSummary,
  PredictPayload,
  EpochRecord,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly field?: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  try {
    const body = (await response.json()) as ApiErrorBody;
    return new ApiError(body.status, body.code, body.message, body.field);
  } catch {
    return new ApiError(response.status, "unknown", response.statusText);
  }
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
  }

  createModel(config: unknown): Promise<{ model_id: string }> {
    return this.post("/api/models", { config });
  }

  importModel(document: unknown): Promise<{ model_id: string }> {
    return this.post("/api/models/import", document);
  }

  predict(modelId: string, pixels: number[], signal?: AbortSignal): Promise<PredictPayload> {
    return this.post(`/api/models/${modelId}/predict`, { pixels }, signal);
  }

  history(modelId: string): Promise<EpochRecord[]> {
    return this.json(`/api/models/${modelId}/history`);
  }

  createDataset(spec: Record<string, unknown>): Promise<{ dataset_id: string; summary: DatasetSummary }> {
    return this.post("/api/datasets", spec);
  }

  getDataset(datasetId: string): Promise<DatasetDocument> {
    return this.json(`/api/datasets/${datasetId}`);
  }

  replaceClass(
    datasetId: string,
    classIndex: number,
    options: { newName?: string; density?: number; seed?: number } = {},
  ): Promise<{ dataset_id: string; summary: DatasetSummary }> {
    return this.post(`/api/datasets/${datasetId}/surgery`, {
      replace_class: {
        class_index: classIndex,
        new_name: options.newName ?? "not-a-digit",
        density: options.density ?? 0.5,
        seed: options.seed ?? 0,
      },
    });
  }

  rebalance(
    datasetId: string,
    proportions: Record<number, number>,
    seed = 0,
  ): Promise<{ dataset_id: string; summary: DatasetSummary }> {
    return this.post(`/api/datasets/${datasetId}/surgery`, {
      rebalance: { proportions, seed },
    });
  }

  /** Open the training stream and deliver each SSE event as it arrives. */
  async train(
    modelId: string,
    body: Record<string, unknown>,
    onEvent: (event: SseEvent) => void,
  ): Promise<void> {
    const response = await fetch(`${this.baseUrl}/api/models/${modelId}/train`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    if (!response.body) throw new ApiError(0, "no_stream", "response has no body");
    const reader = response.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      for (const event of parser.push(decoder.decode(value, { stream: true }))) {
        onEvent(event);
      }
    }
  }
}
