import { describe, expect, it, vi } from "vitest";

import { ratingComplete, renderRatingWidget } from "../src/rating_widget.js";
import type { RatingScores } from "../src/types.js";

const EMPTY: RatingScores = { plausibility: null, meaningfulness: null, faithfulness: null };

function submitButton(el: HTMLElement): HTMLButtonElement {
  return el.querySelector(".rating-submit") as HTMLButtonElement;
}

describe("rating widget", () => {
  it("submit is disabled until all three scores are set", () => {
    const onSubmit = vi.fn();
    const partials: RatingScores[] = [
      EMPTY,
      { ...EMPTY, plausibility: 4 },
      { ...EMPTY, plausibility: 4, meaningfulness: 3 },
    ];
    for (const scores of partials) {
      const el = renderRatingWidget(scores, vi.fn(), onSubmit);
      expect(submitButton(el).disabled).toBe(true);
      submitButton(el).click();
    }
    expect(onSubmit).not.toHaveBeenCalled();

    const complete = { plausibility: 4, meaningfulness: 3, faithfulness: 5 };
    const el = renderRatingWidget(complete, vi.fn(), onSubmit);
    expect(submitButton(el).disabled).toBe(false);
    submitButton(el).click();
    expect(onSubmit).toHaveBeenCalledTimes(1);
  });

  it("renders three discrete 1-5 selectors", () => {
    const el = renderRatingWidget(EMPTY, vi.fn(), vi.fn());
    const rows = el.querySelectorAll(".rating-row");
    expect(rows).toHaveLength(3);
    for (const row of rows) {
      expect(row.querySelectorAll('input[type="radio"]')).toHaveLength(5);
    }
  });

  it("score changes are reported with their dimension", () => {
    const onScore = vi.fn();
    const el = renderRatingWidget(EMPTY, onScore, vi.fn());
    const faithful5 = el.querySelector(
      '.rating-faithfulness input[value="5"]',
    ) as HTMLInputElement;
    faithful5.checked = true;
    faithful5.dispatchEvent(new Event("change"));
    expect(onScore).toHaveBeenCalledWith("faithfulness", 5);
  });

  it("ratingComplete mirrors the widget state", () => {
    expect(ratingComplete(EMPTY)).toBe(false);
    expect(ratingComplete({ plausibility: 1, meaningfulness: 1, faithfulness: 1 })).toBe(true);
  });
});
