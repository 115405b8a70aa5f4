/** Thin fetch client for the workbench API; all UI state comes from here. */

import type { DocumentView, GenerateResponse, GenerationMethod, RiskReport, SessionInfo } from "./types.js";

export class ApiError extends Error {
  constructor(public code: string, message: string) {
    super(message);
  }
}

async function parse<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let code = `http_${resp.status}`;
    let message = resp.statusText;
    try {
      const body = await resp.json();
      if (body.code) {
        code = body.code;
        message = body.message;
      }
    } catch {
      // non-JSON error body, keep the status text
    }
    throw new ApiError(code, message);
  }
  return resp.json() as Promise<T>;
}

export interface WorkbenchApi {
  uploadModel(descriptor: { kind: string; weights?: unknown }): Promise<{ model_id: string }>;
  uploadDataset(jsonl: string): Promise<{ dataset_id: string; records: number; labels: string[] }>;
  createSession(annotatorId: string, modelId: string, datasetId: string, seed?: number): Promise<SessionInfo>;
  getDocument(sessionId: string, expand: boolean): Promise<DocumentView>;
  generate(
    sessionId: string,
    sentenceIndex: number,
    method: GenerationMethod,
    customMask?: number[],
  ): Promise<GenerateResponse>;
  rate(
    sessionId: string,
    trailId: string,
    plausibility: number,
    meaningfulness: number,
    faithfulness: number,
  ): Promise<{ rating_id: string }>;
  risk(modelId: string, instanceId?: string): Promise<RiskReport>;
}

export class WorkbenchClient implements WorkbenchApi {
  constructor(private baseUrl: string = "") {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return parse<T>(resp);
  }

  uploadModel(descriptor: { kind: string; weights?: unknown }): Promise<{ model_id: string }> {
    return this.post("/models", descriptor);
  }

  async uploadDataset(jsonl: string): Promise<{ dataset_id: string; records: number; labels: string[] }> {
    const resp = await fetch(this.baseUrl + "/datasets", { method: "POST", body: jsonl });
    return parse(resp);
  }

  createSession(annotatorId: string, modelId: string, datasetId: string, seed?: number): Promise<SessionInfo> {
    return this.post("/sessions", {
      annotator_id: annotatorId,
      model_id: modelId,
      dataset_id: datasetId,
      ...(seed !== undefined ? { seed } : {}),
    });
  }

  async getDocument(sessionId: string, expand: boolean): Promise<DocumentView> {
    const resp = await fetch(
      `${this.baseUrl}/sessions/${sessionId}/document?expand=${expand}`,
    );
    return parse(resp);
  }

  generate(
    sessionId: string,
    sentenceIndex: number,
    method: GenerationMethod,
    customMask?: number[],
  ): Promise<GenerateResponse> {
    return this.post(`/sessions/${sessionId}/counterfactuals`, {
      sentence_index: sentenceIndex,
      method,
      ...(customMask ? { custom_mask: customMask } : {}),
    });
  }

  rate(
    sessionId: string,
    trailId: string,
    plausibility: number,
    meaningfulness: number,
    faithfulness: number,
  ): Promise<{ rating_id: string }> {
    return this.post(`/sessions/${sessionId}/ratings`, {
      trail_id: trailId,
      plausibility,
      meaningfulness,
      faithfulness,
    });
  }

  async risk(modelId: string, instanceId?: string): Promise<RiskReport> {
    const params = new URLSearchParams({ model_id: modelId });
    if (instanceId) params.set("instance_id", instanceId);
    const resp = await fetch(`${this.baseUrl}/risk?${params}`);
    return parse(resp);
  }
}
