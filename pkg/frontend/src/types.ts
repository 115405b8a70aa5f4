/** Wire types mirroring the workbench HTTP API payloads. */

export interface SessionInfo {
  session_id: string;
  annotator_id: string;
  model_id: string;
  dataset_id: string;
  instance_id: string;
  seed: number;
  trail_ids: string[];
}

export interface DocumentView {
  session_id: string;
  instance_id: string;
  tokens: string[];
  mask: number[];
  sentence_spans: [number, number][];
  rationale_sentences: number[];
  visible_sentences: number[];
  expanded: boolean;
  gold_label: string | null;
}

export interface ReplacementStep {
  position: number;
  old_token: string;
  new_token: string;
  estimated_score: number;
  actual_loss: number;
}

export interface Trail {
  trail_id: string;
  instance_id: string;
  sentence_index: number;
  method: string;
  original_prediction: string;
  steps: ReplacementStep[];
  final_prediction: string;
  flipped: boolean;
}

export interface GenerateResponse {
  trail: Trail;
  sentence_span: [number, number];
  sentence_tokens: string[];
  counterfactual_tokens: string[];
}

export interface AnnotatorRisk {
  annotator_id: string;
  risk: number;
  count: number;
}

export interface RiskReport {
  scope: { model_id: string; instance_id: string | null };
  per_annotator: AnnotatorRisk[];
  aggregate: number;
  total_count: number;
}

export interface RatingScores {
  plausibility: number | null;
  meaningfulness: number | null;
  faithfulness: number | null;
}

export type GenerationMethod = "hotflip" | "mlm";
