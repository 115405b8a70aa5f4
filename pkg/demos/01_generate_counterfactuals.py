"""Generate counterfactual trails for one review with both search methods.

The gradient method scores editable positions by gradient-embedding
dot products and picks replacement tokens by a first-order loss
estimate; the masked-infill method asks a corpus-statistics filler for
the most plausible substitute at each position. Either way, each round
commits the single edit that most reduces the loss toward the opposite
label, stopping at a prediction flip or after five edits.
"""

from cfrisk import GenerationConfig, detokenize, generate_trail
from cfrisk.models import BigramFiller
from cfrisk.rationale import instance_from_record
from cfrisk.core import tokenize

import toy


def show_trail(trail, instance):
    start, end = instance.sentence_spans[trail.sentence_index]
    tokens = list(instance.document.tokens[start:end])
    print(f"  original   : {detokenize(tokens)}   -> {trail.original_prediction}")
    for n, step in enumerate(trail.steps, 1):
        tokens[step.position - start] = step.new_token.upper()
        print(f"  step {n}     : {detokenize(tokens)}"
              f"   (loss toward alternative: {step.actual_loss:+.3f})")
        tokens[step.position - start] = step.new_token
    status = "flipped" if trail.flipped else "did not flip"
    print(f"  final      : {detokenize(tokens)}   -> {trail.final_prediction} ({status})\n")


def main():
    model = toy.train_model()
    records = toy.records()
    review = records[6]  # "truly great acting and a wonderful plot ."
    print(f"review: {review.text!r} (gold label: {review.label})\n")

    # editable positions: top 40% most salient tokens
    instance = instance_from_record(review, model, ratio=0.4)
    editable = [instance.document.tokens[i] for i in instance.mask.positions()]
    print(f"editable rationale tokens: {editable}\n")

    print("gradient search:")
    trail = generate_trail(instance, 0, GenerationConfig(method="hotflip"), model)
    show_trail(trail, instance)

    print("masked infill:")
    filler = BigramFiller.from_corpus([tokenize(t).tokens for t, _ in toy.REVIEWS])
    trail = generate_trail(instance, 0, GenerationConfig(method="mlm"), model, filler)
    show_trail(trail, instance)


if __name__ == "__main__":
    main()
