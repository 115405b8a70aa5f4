/** Running session risk readout, refreshed from GET /risk. */

import type { RiskReport } from "./types.js";

export function renderRiskIndicator(report: RiskReport | null): HTMLElement {
  const root = document.createElement("div");
  root.className = "risk-indicator";
  if (report === null || report.total_count === 0) {
    root.textContent = "model risk: no ratings yet";
    root.dataset.aggregate = "";
    return root;
  }
  root.dataset.aggregate = String(report.aggregate);
  root.textContent =
    `model risk: ${report.aggregate.toFixed(2)} / 4 over ${report.total_count} rated counterfactual(s)`;
  return root;
}
