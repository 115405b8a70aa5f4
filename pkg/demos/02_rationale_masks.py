"""Three ways to decide which tokens are editable.

Edits are only ever proposed inside the rationale mask. Masks can come
from evidence spans shipped with the dataset, from a gradient-saliency
baseline, or from an explicit custom selection (which replaces the base
mask outright, as when an annotator picks the tokens themselves).
"""

from cfrisk import GenerationConfig, generate_trail, mask_from_spans, merge_custom
from cfrisk.core import Instance, tokenize
from cfrisk.rationale import rationale_sentences, saliency_mask

import toy


def render_mask(doc, mask):
    return " ".join(
        tok.upper() if bit else tok for tok, bit in zip(doc.tokens, mask.bits)
    )


def main():
    model = toy.train_model()
    doc = tokenize("i love this movie . the acting is truly wonderful .")
    spans = ((0, 5), (5, 11))

    print("document:", doc.text(), "\n")

    file_mask = mask_from_spans(doc, [(1, 2), (9, 10)])
    print("1. from dataset evidence spans:")
    print("  ", render_mask(doc, file_mask))

    sal_mask = saliency_mask(model, doc, ratio=0.2)
    print("2. from gradient saliency (top 20%):")
    print("  ", render_mask(doc, sal_mask))

    custom = merge_custom(file_mask, {3})  # replaces the base selection
    print("3. custom selection {3} (replaces the base mask):")
    print("  ", render_mask(doc, custom), "\n")

    instance = Instance("demo", doc, spans, file_mask)
    print("sentences containing rationale tokens:", rationale_sentences(instance))

    custom_instance = Instance("demo-custom", doc, spans, custom)
    trail = generate_trail(custom_instance, 0, GenerationConfig(), model)
    positions = sorted(step.position for step in trail.steps)
    print(f"with the custom mask, every edit lands on position 3: {positions}")


if __name__ == "__main__":
    main()
