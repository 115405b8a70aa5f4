"""Outer generation loop: single-token edits until the prediction flips.

Each iteration attributes positions, proposes candidate one-edits via
the configured method, commits the candidate with the lowest actual
loss toward the alternative label, and re-checks the prediction. The
loop stops on the first flip, at `max_steps` edits, or when no editable
position remains.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import threading
import weakref
from contextlib import nullcontext
from typing import Sequence

from .core import (
    CapabilityError,
    CounterfactualTrail,
    GenerationConfig,
    Instance,
    RationaleMask,
    ReplacementStep,
    TokenSequence,
    ValidationError,
    apply_replacement,
)
from .hotflip import propose_edits
from .mlm import PromptTemplate, fill_candidates
from .models import CAP_CONCURRENT, CAP_GRADIENTS, AssessedModel, FillModel, Prediction
from .rationale import rationale_sentences

log = logging.getLogger(__name__)


def alternative_label(model: AssessedModel, seq: TokenSequence) -> str:
    """The non-predicted label with the highest class score."""
    prediction = model.predict(seq)
    return alternative_from_prediction(model.label_set, prediction)


def alternative_from_prediction(label_set: Sequence[str], prediction: Prediction) -> str:
    best: tuple[float, int] | None = None
    for idx, label in enumerate(label_set):
        if label == prediction.label:
            continue
        score = prediction.class_scores[label]
        if best is None or (-score, idx) < best:
            best = (-score, idx)
    if best is None:
        raise ValidationError("need at least two labels")
    return label_set[best[1]]


def trail_fingerprint(
    instance_id: str,
    sentence_index: int,
    config: GenerationConfig,
    mask_bits: Sequence[int],
    model_id: str | None,
    seed: int | None,
) -> str:
    """Deterministic trail id: identical generation requests share one id."""
    payload = json.dumps(
        {
            "instance": instance_id,
            "sentence": sentence_index,
            "config": config.to_dict(),
            "mask": list(mask_bits),
            "model": model_id,
            "seed": seed,
        },
        sort_keys=True,
    )
    return "t-" + hashlib.sha256(payload.encode()).hexdigest()[:12]


_adapter_locks: "weakref.WeakKeyDictionary[AssessedModel, threading.Lock]" = (
    weakref.WeakKeyDictionary()
)
_locks_guard = threading.Lock()


def adapter_guard(model: AssessedModel):
    """Context serializing inference for adapters not declared concurrent-safe."""
    if CAP_CONCURRENT in model.capabilities():
        return nullcontext()
    with _locks_guard:
        lock = _adapter_locks.get(model)
        if lock is None:
            lock = _adapter_locks.setdefault(model, threading.Lock())
    return lock


def generate_trail(
    instance: Instance,
    sentence_index: int,
    config: GenerationConfig,
    model: AssessedModel,
    filler: FillModel | None = None,
    template: PromptTemplate | None = None,
    model_id: str | None = None,
    seed: int | None = None,
) -> CounterfactualTrail:
    """Run the replacement loop on one sentence of one instance.

    Edits are restricted to rationale positions inside the chosen
    sentence, each position is edited at most once, and the flip is
    judged on the scope configured in `config.prediction_scope`.
    """
    if not 0 <= sentence_index < len(instance.sentence_spans):
        raise ValidationError(f"no sentence {sentence_index} in instance {instance.id}")
    if config.method == "hotflip" and CAP_GRADIENTS not in model.capabilities():
        raise CapabilityError("hotflip needs a differentiable model adapter")
    if config.method == "mlm" and filler is None:
        raise CapabilityError("mlm needs a fill model")
    template = template or PromptTemplate()

    start, end = instance.sentence_spans[sentence_index]
    sentence = TokenSequence(instance.document.tokens[start:end])
    local_bits = list(instance.mask.bits[start:end])
    if not any(local_bits):
        raise ValidationError(
            f"sentence {sentence_index} of instance {instance.id} has no editable tokens"
        )

    def scoped(seq: TokenSequence) -> TokenSequence:
        if config.prediction_scope == "sentence":
            return seq
        doc = list(instance.document.tokens)
        doc[start:end] = list(seq.tokens)
        return TokenSequence(tuple(doc))

    with adapter_guard(model):
        original = model.predict(scoped(sentence))
        alt = alternative_from_prediction(model.label_set, original)

        current = sentence
        prediction = original
        steps: list[ReplacementStep] = []
        used_positions: set[int] = set()
        tried_tokens: dict[int, set[str]] = {}

        for _ in range(config.max_steps):
            open_bits = [
                b if i not in used_positions else 0 for i, b in enumerate(local_bits)
            ]
            open_mask = RationaleMask(tuple(open_bits))
            if not open_mask.count():
                break
            if config.method == "hotflip":
                candidates = propose_edits(
                    current, open_mask, alt, model, config.top_p_positions, tried_tokens
                )
            else:
                candidates = fill_candidates(
                    current, open_mask, alt, filler, template, config.fill_top_k, tried_tokens
                )
            if not candidates:
                break

            best: tuple[float, int, str, ReplacementStep, TokenSequence] | None = None
            for cand in candidates:
                edited = apply_replacement(current, cand.step)
                loss = model.loss(scoped(edited), alt)
                key = (loss, cand.step.position, cand.step.new_token)
                if best is None or key < best[:3]:
                    best = (*key, cand.step, edited)
            loss, _, _, chosen, current = best
            committed = ReplacementStep(
                position=start + chosen.position,
                old_token=chosen.old_token,
                new_token=chosen.new_token,
                estimated_score=chosen.estimated_score,
                actual_loss=loss,
            )
            steps.append(committed)
            used_positions.add(chosen.position)
            tried_tokens.setdefault(chosen.position, set()).add(chosen.new_token)

            prediction = model.predict(scoped(current))
            if prediction.label != original.label:
                break

    if not steps:
        raise ValidationError("no edit could be proposed")

    mask_snapshot = instance.mask.bits[start:end]
    return CounterfactualTrail(
        trail_id=trail_fingerprint(
            instance.id, sentence_index, config, mask_snapshot, model_id, seed
        ),
        instance_id=instance.id,
        sentence_index=sentence_index,
        method=config.method,
        original_prediction=original.label,
        steps=tuple(steps),
        final_prediction=prediction.label,
        flipped=prediction.label != original.label,
        config_snapshot=config,
        model_id=model_id,
        seed=seed,
    )


def replay_trail(instance: Instance, trail: CounterfactualTrail) -> TokenSequence:
    """Re-apply a trail's steps to its sentence; raises on stale edits."""
    start, end = instance.sentence_spans[trail.sentence_index]
    seq = TokenSequence(instance.document.tokens[start:end])
    for step in trail.steps:
        local = ReplacementStep(
            position=step.position - start,
            old_token=step.old_token,
            new_token=step.new_token,
            estimated_score=step.estimated_score,
            actual_loss=step.actual_loss,
        )
        seq = apply_replacement(seq, local)
    return seq


def generate_batch(
    instances: Sequence[Instance],
    config: GenerationConfig,
    model: AssessedModel,
    filler: FillModel | None = None,
    template: PromptTemplate | None = None,
    limit: int = 10,
    seed: int = 0,
    model_id: str | None = None,
) -> list[CounterfactualTrail]:
    """Sample (instance, rationale sentence) pairs and generate one trail each.

    Sampling is seeded, so reruns are deterministic; per-instance failures
    are logged and skipped rather than aborting the batch.
    """
    rng = random.Random(seed)
    trails: list[CounterfactualTrail] = []
    for _ in range(limit):
        instance = rng.choice(instances)
        eligible = rationale_sentences(instance)
        if not eligible:
            log.warning("instance %s has no rationale sentences, skipped", instance.id)
            continue
        sentence_index = rng.choice(eligible)
        try:
            trails.append(
                generate_trail(
                    instance,
                    sentence_index,
                    config,
                    model,
                    filler,
                    template,
                    model_id=model_id,
                    seed=seed,
                )
            )
        except (ValidationError, CapabilityError) as exc:
            log.warning("generation failed for %s/%d: %s", instance.id, sentence_index, exc)
    return trails
