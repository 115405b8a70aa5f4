"""First-order (gradient x embedding) token substitution search.

Positions are attributed by the dot product of each editable token's
embedding with the loss gradient toward the alternative label. Token
selection minimizes the first-order estimate of the loss change,
grad_i . (e_new - e_old); candidate one-edits are then re-ranked by the
actual loss under beam search. On the linear reference model the
estimate equals the exact delta, which the tests exploit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    GenerationConfig,
    RationaleMask,
    ReplacementStep,
    TokenSequence,
    ValidationError,
    apply_replacement,
)
from .models import CAP_GRADIENTS, UNKNOWN_TOKEN, AssessedModel
from .core import CapabilityError


@dataclass(frozen=True)
class PositionScore:
    position: int
    score: float


@dataclass(frozen=True)
class CandidateEdit:
    step: ReplacementStep
    estimated_loss_delta: float


def position_scores(
    seq: TokenSequence,
    mask: RationaleMask,
    alt: str,
    model: AssessedModel,
) -> list[PositionScore]:
    """Per-editable-position attribution, sorted by |score| descending.

    score_i = grad_i(alt) . embed(seq_i); ties break toward lower index.
    """
    if CAP_GRADIENTS not in model.capabilities():
        raise CapabilityError("gradient search needs a differentiable adapter")
    editable = mask.positions()
    if not editable:
        raise ValidationError("mask has no editable positions")
    grads = np.asarray(model.grad_embedding(seq, alt), dtype=float)
    scored = [
        PositionScore(i, float(grads[i] @ model.embed(seq.tokens[i]))) for i in editable
    ]
    return sorted(scored, key=lambda ps: (-abs(ps.score), ps.position))


def top_p_positions(scores: Sequence[PositionScore], p: int) -> list[int]:
    if p < 1:
        raise ValidationError("p must be >= 1")
    return [ps.position for ps in scores[:p]]


def best_token(
    seq: TokenSequence,
    i: int,
    alt: str,
    model: AssessedModel,
    forbid: frozenset[str] | set[str] = frozenset(),
) -> CandidateEdit:
    """Pick the vocabulary token minimizing the first-order loss estimate at i.

    The incumbent token and the unknown marker are always excluded; ties
    break by lexicographic token order.
    """
    grads = np.asarray(model.grad_embedding(seq, alt), dtype=float)
    grad_i = grads[i]
    old = seq.tokens[i]
    e_old = model.embed(old)
    excluded = set(forbid) | {old, UNKNOWN_TOKEN}
    best: tuple[float, str] | None = None
    for tok in model.vocabulary:
        if tok in excluded:
            continue
        delta = float(grad_i @ (model.embed(tok) - e_old))
        if best is None or (delta, tok) < best:
            best = (delta, tok)
    if best is None:
        raise ValidationError(f"no candidate tokens at position {i}")
    delta, tok = best
    step = ReplacementStep(
        position=i, old_token=old, new_token=tok, estimated_score=delta, actual_loss=0.0
    )
    return CandidateEdit(step=step, estimated_loss_delta=delta)


def propose_edits(
    seq: TokenSequence,
    mask: RationaleMask,
    alt: str,
    model: AssessedModel,
    p: int,
    forbid_per_position: Mapping[int, set[str]] | None = None,
) -> list[CandidateEdit]:
    """Top-p positions x best token each: the candidate one-edits for a step."""
    forbid_per_position = forbid_per_position or {}
    scores = position_scores(seq, mask, alt, model)
    edits = []
    for i in top_p_positions(scores, p):
        try:
            edits.append(best_token(seq, i, alt, model, forbid_per_position.get(i, set())))
        except ValidationError:
            continue  # position exhausted, others may still have candidates
    return edits


def beam_step(
    beams: Sequence[tuple[TokenSequence, float]],
    mask: RationaleMask,
    config: GenerationConfig,
    alt: str,
    model: AssessedModel,
    used_positions: Sequence[set[int]] | None = None,
) -> list[tuple[TokenSequence, float]]:
    """Expand every beam by one edit and keep the lowest actual losses.

    Each beam contributes top-p positions x best-token candidates; all
    candidates are scored by the actual loss toward `alt`, duplicates
    (identical sequences) collapse, and the best `beam_width` survive,
    sorted ascending.
    """
    if not beams:
        raise ValidationError("no beams to expand")
    used_positions = used_positions or [set() for _ in beams]
    candidates: dict[tuple[str, ...], float] = {}
    expanded = False
    for (seq, _), used in zip(beams, used_positions):
        open_bits = tuple(
            b if i not in used else 0 for i, b in enumerate(mask.bits)
        )
        open_mask = RationaleMask(open_bits)
        if not open_mask.count():
            continue
        for cand in propose_edits(seq, open_mask, alt, model, config.top_p_positions):
            edited = apply_replacement(seq, cand.step)
            if edited.tokens not in candidates:
                candidates[edited.tokens] = model.loss(edited, alt)
                expanded = True
    if not expanded:
        raise ValidationError("no expandable beam: all positions used")
    ranked = sorted(candidates.items(), key=lambda kv: (kv[1], kv[0]))
    return [(TokenSequence(toks), loss) for toks, loss in ranked[: config.beam_width]]
