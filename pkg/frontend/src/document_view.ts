/** Left pane: the document with rationale tokens in bold.
 *
 * Only sentences containing rationale tokens are shown until "Expand
 * all" is toggled. Clicking a sentence selects it for counterfactual
 * generation; clicking individual tokens inside the selected sentence
 * builds a custom mask.
 */

import type { DocumentView } from "./types.js";

export interface DocumentCallbacks {
  onSelectSentence: (index: number) => void;
  onToggleExpand: (expand: boolean) => void;
  onCustomMaskChange: (positions: number[]) => void;
}

export function renderDocument(
  doc: DocumentView,
  selectedSentence: number | null,
  customMask: Set<number>,
  callbacks: DocumentCallbacks,
): HTMLElement {
  const root = document.createElement("section");
  root.className = "document-view";

  const heading = document.createElement("h2");
  heading.textContent = "1. Select a sentence";
  root.appendChild(heading);

  const expand = document.createElement("button");
  expand.className = "expand-all";
  expand.textContent = doc.expanded ? "Show rationale only" : "Expand all";
  expand.addEventListener("click", () => callbacks.onToggleExpand(!doc.expanded));
  root.appendChild(expand);

  for (const sentenceIndex of doc.visible_sentences) {
    const [start, end] = doc.sentence_spans[sentenceIndex];
    const sentence = document.createElement("p");
    sentence.className = "sentence";
    sentence.dataset.sentenceIndex = String(sentenceIndex);
    if (sentenceIndex === selectedSentence) sentence.classList.add("selected");
    if (!doc.rationale_sentences.includes(sentenceIndex)) {
      sentence.classList.add("no-rationale");
      sentence.title = "no editable tokens";
    }

    for (let i = start; i < end; i++) {
      const token = doc.mask[i] === 1
        ? document.createElement("strong")
        : document.createElement("span");
      token.classList.add("token");
      token.dataset.position = String(i);
      token.textContent = doc.tokens[i];
      if (customMask.has(i)) token.classList.add("custom-selected");
      token.addEventListener("click", (event) => {
        event.stopPropagation();
        if (sentenceIndex !== selectedSentence) {
          callbacks.onSelectSentence(sentenceIndex);
          return;
        }
        const next = new Set(customMask);
        if (next.has(i)) {
          next.delete(i);
        } else {
          next.add(i);
        }
        callbacks.onCustomMaskChange([...next].sort((a, b) => a - b));
      });
      sentence.appendChild(token);
      if (i < end - 1) sentence.appendChild(document.createTextNode(" "));
    }
    sentence.addEventListener("click", () => callbacks.onSelectSentence(sentenceIndex));
    root.appendChild(sentence);
  }
  return root;
}
