/** Three 1-5 score selectors; submit stays disabled until all are set. */

import type { RatingScores } from "./types.js";

export const RATING_DIMENSIONS = ["plausibility", "meaningfulness", "faithfulness"] as const;
export type RatingDimension = (typeof RATING_DIMENSIONS)[number];

export function ratingComplete(scores: RatingScores): boolean {
  return RATING_DIMENSIONS.every((dim) => scores[dim] !== null);
}

export function renderRatingWidget(
  scores: RatingScores,
  onScore: (dimension: RatingDimension, value: number) => void,
  onSubmit: () => void,
): HTMLElement {
  const root = document.createElement("form");
  root.className = "rating-widget";
  root.addEventListener("submit", (event) => event.preventDefault());

  for (const dimension of RATING_DIMENSIONS) {
    const row = document.createElement("fieldset");
    row.className = `rating-row rating-${dimension}`;
    const legend = document.createElement("legend");
    legend.textContent = dimension;
    row.appendChild(legend);
    for (let value = 1; value <= 5; value++) {
      const label = document.createElement("label");
      const input = document.createElement("input");
      input.type = "radio";
      input.name = dimension;
      input.value = String(value);
      input.checked = scores[dimension] === value;
      input.addEventListener("change", () => onScore(dimension, value));
      label.appendChild(input);
      label.appendChild(document.createTextNode(String(value)));
      row.appendChild(label);
    }
    root.appendChild(row);
  }

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.className = "rating-submit";
  submit.textContent = "Submit rating";
  submit.disabled = !ratingComplete(scores);
  submit.addEventListener("click", () => {
    if (ratingComplete(scores)) onSubmit();
  });
  root.appendChild(submit);
  return root;
}
