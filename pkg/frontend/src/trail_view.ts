/** Right pane: the counterfactual trail, one row per replacement.
 *
 * Row n shows the sentence after the first n edits with exactly the
 * n-th replaced word highlighted. Rows are pure derivations of the
 * generate response; no client-side search logic.
 */

import type { GenerateResponse } from "./types.js";

export function trailRows(payload: GenerateResponse): { tokens: string[]; highlight: number }[] {
  const [start] = payload.sentence_span;
  const tokens = [...payload.sentence_tokens];
  const rows = [];
  for (const step of payload.trail.steps) {
    tokens[step.position - start] = step.new_token;
    rows.push({ tokens: [...tokens], highlight: step.position - start });
  }
  return rows;
}

export function renderTrail(payload: GenerateResponse): HTMLElement {
  const root = document.createElement("section");
  root.className = "trail-view";

  const heading = document.createElement("h2");
  heading.textContent = "2. How do you like the counterfactuals?";
  root.appendChild(heading);

  const origin = document.createElement("p");
  origin.className = "trail-origin";
  origin.textContent =
    `${payload.sentence_tokens.join(" ")}  (predicted: ${payload.trail.original_prediction})`;
  root.appendChild(origin);

  const list = document.createElement("ol");
  list.className = "trail-steps";
  for (const row of trailRows(payload)) {
    const item = document.createElement("li");
    item.className = "trail-step";
    row.tokens.forEach((token, i) => {
      if (i === row.highlight) {
        const mark = document.createElement("mark");
        mark.textContent = token;
        item.appendChild(mark);
      } else {
        item.appendChild(document.createTextNode(token));
      }
      if (i < row.tokens.length - 1) item.appendChild(document.createTextNode(" "));
    });
    list.appendChild(item);
  }
  root.appendChild(list);

  const verdict = document.createElement("p");
  verdict.className = payload.trail.flipped ? "flipped" : "not-flipped";
  verdict.textContent = payload.trail.flipped
    ? `prediction flipped to ${payload.trail.final_prediction}`
    : `prediction unchanged (${payload.trail.final_prediction})`;
  root.appendChild(verdict);
  return root;
}
