"""Rationale masks: which token positions are editable.

Three sources: evidence spans shipped with the dataset, a saliency
baseline (|gradient . embedding| per position) for differentiable
models, or an explicit custom selection from the annotator. Custom
selections replace the base mask outright.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

from .core import (
    CapabilityError,
    Instance,
    RationaleMask,
    TokenSequence,
    ValidationError,
    split_sentences,
    tokenize,
)
from .models import CAP_GRADIENTS, AssessedModel
from .store import DatasetRecord

DEFAULT_SALIENCY_RATIO = 0.2


def mask_from_spans(doc: TokenSequence, spans: Iterable[tuple[int, int]]) -> RationaleMask:
    """Bit i set iff i is covered by some [start, end) span."""
    bits = [0] * len(doc)
    for start, end in spans:
        if start < 0 or end > len(doc) or start >= end:
            raise ValidationError(f"span ({start}, {end}) out of range for length {len(doc)}")
        for i in range(start, end):
            bits[i] = 1
    return RationaleMask(tuple(bits))


def saliency_mask(model: AssessedModel, doc: TokenSequence, ratio: float = DEFAULT_SALIENCY_RATIO) -> RationaleMask:
    """Set the ceil(ratio * l) positions with the largest |grad . embedding|.

    Attribution is taken toward the model's own prediction; ties break
    toward lower positions.
    """
    if not 0 < ratio <= 1:
        raise ValidationError("ratio must be in (0, 1]")
    if CAP_GRADIENTS not in model.capabilities():
        raise CapabilityError("saliency mask needs a differentiable adapter")
    predicted = model.predict(doc).label
    grads = np.asarray(model.grad_embedding(doc, predicted), dtype=float)
    scores = [abs(float(grads[i] @ model.embed(tok))) for i, tok in enumerate(doc.tokens)]
    k = math.ceil(ratio * len(doc))
    ranked = sorted(range(len(doc)), key=lambda i: (-scores[i], i))[:k]
    bits = [0] * len(doc)
    for i in ranked:
        bits[i] = 1
    return RationaleMask(tuple(bits))


def merge_custom(base: RationaleMask, selected: Iterable[int]) -> RationaleMask:
    """Replace the base mask with exactly the selected positions."""
    selected = set(selected)
    if not selected:
        raise ValidationError("custom selection is empty, nothing editable")
    if any(i < 0 or i >= len(base) for i in selected):
        raise ValidationError("custom selection out of range")
    return RationaleMask(tuple(1 if i in selected else 0 for i in range(len(base))))


def rationale_sentences(instance: Instance) -> list[int]:
    """Indices of sentences containing at least one rationale token."""
    out = []
    for idx, (start, end) in enumerate(instance.sentence_spans):
        if any(instance.mask.bits[start:end]):
            out.append(idx)
    return out


def instance_from_record(
    record: DatasetRecord,
    model: AssessedModel | None = None,
    ratio: float = DEFAULT_SALIENCY_RATIO,
) -> Instance:
    """Materialize an Instance from a stored dataset record.

    Mask preference order: rationale spans from the file, then the
    saliency baseline when the model is differentiable, then all-ones
    (everything editable) as a last resort for fill-only setups.
    """
    doc = TokenSequence(tuple(record.tokens)) if record.tokens else tokenize(record.text)
    spans = (
        tuple((int(s), int(e)) for s, e in record.sentence_spans)
        if record.sentence_spans
        else split_sentences(doc.tokens)
    )
    if record.rationale_spans:
        mask = mask_from_spans(doc, record.rationale_spans)
    elif model is not None and CAP_GRADIENTS in model.capabilities():
        mask = saliency_mask(model, doc, ratio)
    else:
        mask = RationaleMask(tuple(1 for _ in range(len(doc))))
    return Instance(
        id=record.id,
        document=doc,
        sentence_spans=spans,
        mask=mask,
        gold_label=record.label,
    )
