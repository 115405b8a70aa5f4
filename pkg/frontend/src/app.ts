/** Page controller: all state is derived from API responses.
 *
 * Reloading mid-session only needs the session id; every pane is
 * reconstructed from GET responses. Errors are shown inline and the
 * previous trail stays on screen.
 */

import { ApiError, WorkbenchApi } from "./api.js";
import { renderDocument } from "./document_view.js";
import { renderTrail } from "./trail_view.js";
import { RatingDimension, renderRatingWidget } from "./rating_widget.js";
import { renderRiskIndicator } from "./risk_indicator.js";
import type {
  DocumentView,
  GenerateResponse,
  GenerationMethod,
  RatingScores,
  RiskReport,
  SessionInfo,
} from "./types.js";

const EMPTY_SCORES: RatingScores = { plausibility: null, meaningfulness: null, faithfulness: null };

export class WorkbenchApp {
  session: SessionInfo | null = null;
  documentView: DocumentView | null = null;
  selectedSentence: number | null = null;
  customMask = new Set<number>();
  trail: GenerateResponse | null = null;
  scores: RatingScores = { ...EMPTY_SCORES };
  riskReport: RiskReport | null = null;
  method: GenerationMethod = "hotflip";
  notice = "";

  constructor(private client: WorkbenchApi, private root: HTMLElement) {}

  async start(annotatorId: string, modelId: string, datasetId: string, seed?: number): Promise<void> {
    this.session = await this.client.createSession(annotatorId, modelId, datasetId, seed);
    this.documentView = await this.client.getDocument(this.session.session_id, false);
    this.riskReport = await this.client.risk(this.session.model_id);
    this.render();
  }

  async toggleExpand(expand: boolean): Promise<void> {
    if (!this.session) return;
    this.documentView = await this.client.getDocument(this.session.session_id, expand);
    this.render();
  }

  async selectSentence(index: number): Promise<void> {
    if (!this.session || !this.documentView) return;
    this.selectedSentence = index;
    this.customMask.clear();
    if (!this.documentView.rationale_sentences.includes(index)) {
      this.notice = "no editable tokens in this sentence";
      this.render();
      return;
    }
    await this.generate();
  }

  async setCustomMask(positions: number[]): Promise<void> {
    this.customMask = new Set(positions);
    if (positions.length === 0) {
      // empty selections never reach the server
      this.render();
      return;
    }
    await this.generate(positions);
  }

  private async generate(customMask?: number[]): Promise<void> {
    if (!this.session || this.selectedSentence === null) return;
    try {
      this.trail = await this.client.generate(
        this.session.session_id,
        this.selectedSentence,
        this.method,
        customMask,
      );
      this.scores = { ...EMPTY_SCORES };
      this.notice = "";
    } catch (err) {
      this.notice = err instanceof ApiError ? err.message : String(err);
    }
    this.render();
  }

  setScore(dimension: RatingDimension, value: number): void {
    this.scores = { ...this.scores, [dimension]: value };
    this.render();
  }

  async submitRating(): Promise<void> {
    if (!this.session || !this.trail) return;
    const { plausibility, meaningfulness, faithfulness } = this.scores;
    if (plausibility === null || meaningfulness === null || faithfulness === null) return;
    try {
      await this.client.rate(
        this.session.session_id,
        this.trail.trail.trail_id,
        plausibility,
        meaningfulness,
        faithfulness,
      );
      this.riskReport = await this.client.risk(this.session.model_id);
      this.scores = { ...EMPTY_SCORES };
      this.notice = "rating recorded";
    } catch (err) {
      this.notice = err instanceof ApiError ? err.message : String(err);
    }
    this.render();
  }

  setMethod(method: GenerationMethod): void {
    this.method = method;
  }

  render(): void {
    this.root.textContent = "";

    const toolbar = document.createElement("header");
    toolbar.className = "toolbar";
    const methodSelect = document.createElement("select");
    methodSelect.className = "method-select";
    for (const method of ["hotflip", "mlm"] as const) {
      const option = document.createElement("option");
      option.value = method;
      option.textContent = method;
      option.selected = method === this.method;
      methodSelect.appendChild(option);
    }
    methodSelect.addEventListener("change", () =>
      this.setMethod(methodSelect.value as GenerationMethod),
    );
    toolbar.appendChild(methodSelect);
    toolbar.appendChild(renderRiskIndicator(this.riskReport));
    this.root.appendChild(toolbar);

    if (this.notice) {
      const note = document.createElement("p");
      note.className = "notice";
      note.textContent = this.notice;
      this.root.appendChild(note);
    }

    const panes = document.createElement("main");
    panes.className = "panes";
    if (this.documentView) {
      panes.appendChild(
        renderDocument(this.documentView, this.selectedSentence, this.customMask, {
          onSelectSentence: (index) => void this.selectSentence(index),
          onToggleExpand: (expand) => void this.toggleExpand(expand),
          onCustomMaskChange: (positions) => void this.setCustomMask(positions),
        }),
      );
    }
    if (this.trail) {
      const right = document.createElement("div");
      right.className = "right-pane";
      right.appendChild(renderTrail(this.trail));
      right.appendChild(
        renderRatingWidget(
          this.scores,
          (dimension, value) => this.setScore(dimension, value),
          () => void this.submitRating(),
        ),
      );
      panes.appendChild(right);
    }
    this.root.appendChild(panes);
  }
}
