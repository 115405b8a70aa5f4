/** Shared payload fixtures and a mock API for the UI tests. */

import { vi } from "vitest";
import type { WorkbenchApi } from "../src/api.js";
import type { DocumentView, GenerateResponse, RiskReport, SessionInfo } from "../src/types.js";

export const SESSION: SessionInfo = {
  session_id: "s-test",
  annotator_id: "ann-1",
  model_id: "m-test",
  dataset_id: "ds-test",
  instance_id: "doc-1",
  seed: 5,
  trail_ids: [],
};

// "i love this movie . this film is great ." with rationale in sentence 1
export const DOCUMENT: DocumentView = {
  session_id: "s-test",
  instance_id: "doc-1",
  tokens: ["i", "love", "this", "movie", ".", "this", "film", "is", "great", "."],
  mask: [0, 0, 0, 0, 0, 0, 1, 0, 1, 0],
  sentence_spans: [[0, 5], [5, 10]],
  rationale_sentences: [1],
  visible_sentences: [1],
  expanded: false,
  gold_label: "positive",
};

export const DOCUMENT_EXPANDED: DocumentView = {
  ...DOCUMENT,
  visible_sentences: [0, 1],
  expanded: true,
};

export const TRAIL_RESPONSE: GenerateResponse = {
  trail: {
    trail_id: "t-abc",
    instance_id: "doc-1",
    sentence_index: 1,
    method: "hotflip",
    original_prediction: "positive",
    steps: [
      { position: 8, old_token: "great", new_token: "boring", estimated_score: -0.5, actual_loss: 0.1 },
      { position: 6, old_token: "film", new_token: "story", estimated_score: -0.2, actual_loss: -0.05 },
    ],
    final_prediction: "negative",
    flipped: true,
  },
  sentence_span: [5, 10],
  sentence_tokens: ["this", "film", "is", "great", "."],
  counterfactual_tokens: ["this", "story", "is", "boring", "."],
};

export const CUSTOM_TRAIL_RESPONSE: GenerateResponse = {
  ...TRAIL_RESPONSE,
  trail: {
    ...TRAIL_RESPONSE.trail,
    trail_id: "t-custom",
    steps: [
      { position: 8, old_token: "great", new_token: "fine", estimated_score: -0.1, actual_loss: 0.2 },
    ],
    final_prediction: "positive",
    flipped: false,
  },
  counterfactual_tokens: ["this", "film", "is", "fine", "."],
};

export function riskReport(aggregate: number, total: number): RiskReport {
  return {
    scope: { model_id: "m-test", instance_id: null },
    per_annotator: total
      ? [{ annotator_id: "ann-1", risk: aggregate, count: total }]
      : [],
    aggregate,
    total_count: total,
  };
}

export class MockApi implements WorkbenchApi {
  riskValue = riskReport(0, 0);
  uploadModel = vi.fn(async () => ({ model_id: "m-test" }));
  uploadDataset = vi.fn(async () => ({ dataset_id: "ds-test", records: 2, labels: ["negative", "positive"] }));
  createSession = vi.fn(async () => SESSION);
  getDocument = vi.fn(async (_sid: string, expand: boolean) =>
    expand ? DOCUMENT_EXPANDED : DOCUMENT,
  );
  generate = vi.fn(async (_sid: string, _sentence: number, _method: string, customMask?: number[]) =>
    customMask ? CUSTOM_TRAIL_RESPONSE : TRAIL_RESPONSE,
  );
  rate = vi.fn(async () => {
    this.riskValue = riskReport(2.0, 1);
    return { rating_id: "r-000001" };
  });
  risk = vi.fn(async () => this.riskValue);
}
