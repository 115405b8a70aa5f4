"""Masked-infill counterfactual steps.

Every editable position gets the same attribution score; for each one
the sequence is masked at that position, wrapped in a label-bearing
prompt, and the fill model proposes its single best token. The final
step is whichever proposal minimizes the actual loss toward the
alternative label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .core import (
    RationaleMask,
    ReplacementStep,
    TokenSequence,
    ValidationError,
    apply_replacement,
    tokenize,
)
from .hotflip import CandidateEdit, PositionScore
from .models import UNKNOWN_TOKEN, AssessedModel, FillModel

MASKED_SEQ_SLOT = "<masked sequence>"
ALT_LABEL_SLOT = "<alternative label>"

DEFAULT_TEMPLATE_TEXT = '"<masked sequence>" the sentiment of this review is "<alternative label>"'


@dataclass(frozen=True)
class PromptTemplate:
    """Text pattern with one masked-sequence slot and one label slot."""

    text: str = DEFAULT_TEMPLATE_TEXT
    label_names: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for slot in (MASKED_SEQ_SLOT, ALT_LABEL_SLOT):
            if self.text.count(slot) != 1:
                raise ValidationError(f"template must contain {slot!r} exactly once")

    def display_label(self, label: str) -> str:
        return self.label_names.get(label, label)

    def instantiate_text(self, masked_text: str, label: str) -> str:
        return self.text.replace(MASKED_SEQ_SLOT, masked_text).replace(
            ALT_LABEL_SLOT, self.display_label(label)
        )


def _segment_tokens(segment: str) -> list[str]:
    if not segment.strip():
        return []
    return list(tokenize(segment).tokens)


def build_prompt(
    seq: TokenSequence,
    i: int,
    alt: str,
    template: PromptTemplate,
    mask_token: str = "[mask]",
) -> TokenSequence:
    """Prompt tokens: the sequence masked at position i, spliced into the template.

    Rendering the result with `TokenSequence.text()` reproduces the
    instantiated template byte for byte; the mask token stays a single
    standalone token so fillers can locate it.
    """
    if not 0 <= i < len(seq):
        raise ValidationError(f"mask position {i} out of range")
    masked = list(seq.tokens)
    masked[i] = mask_token
    # Splice as token lists rather than re-tokenizing the final string so
    # the mask token survives punctuation splitting.
    seq_at = template.text.index(MASKED_SEQ_SLOT)
    label_at = template.text.index(ALT_LABEL_SLOT)
    first, second = sorted(
        [(seq_at, MASKED_SEQ_SLOT, masked), (label_at, ALT_LABEL_SLOT, [template.display_label(alt)])]
    )
    head = template.text[: first[0]]
    mid = template.text[first[0] + len(first[1]) : second[0]]
    tail = template.text[second[0] + len(second[1]) :]
    tokens = (
        _segment_tokens(head)
        + list(first[2])
        + _segment_tokens(mid)
        + list(second[2])
        + _segment_tokens(tail)
    )
    return TokenSequence(tuple(tokens))


def prompt_mask_offset(template: PromptTemplate, alt: str = "") -> int:
    """Number of prompt tokens preceding the masked sequence.

    The label slot may sit before the masked sequence, so it is
    substituted before counting.
    """
    head = template.text[: template.text.index(MASKED_SEQ_SLOT)]
    head = head.replace(ALT_LABEL_SLOT, template.display_label(alt))
    return len(_segment_tokens(head))


def position_scores_uniform(mask: RationaleMask) -> list[PositionScore]:
    """One entry per set bit, all scores 1.0, in document order."""
    editable = mask.positions()
    if not editable:
        raise ValidationError("mask has no editable positions")
    return [PositionScore(i, 1.0) for i in editable]


def fill_candidates(
    seq: TokenSequence,
    mask: RationaleMask,
    alt: str,
    filler: FillModel,
    template: PromptTemplate,
    fill_top_k: int = 10,
    forbid_per_position: Mapping[int, set[str]] | None = None,
) -> list[CandidateEdit]:
    """One proposal per editable position: the filler's top token there.

    The incumbent token, tokens already tried at the position, the mask
    token itself and the unknown marker are excluded. `fill_top_k` caps
    how deep we look into the ranked fills for an admissible token.
    """
    forbid_per_position = forbid_per_position or {}
    offset = prompt_mask_offset(template, alt)
    edits: list[CandidateEdit] = []
    for ps in position_scores_uniform(mask):
        i = ps.position
        prompt = build_prompt(seq, i, alt, template, filler.mask_token)
        scores = filler.fill_scores(prompt, offset + i)
        if not scores:
            raise ValidationError(f"filler returned no scores at position {i}")
        excluded = set(forbid_per_position.get(i, set()))
        excluded |= {seq.tokens[i], filler.mask_token, UNKNOWN_TOKEN}
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:fill_top_k]
        for tok, score in ranked:
            if tok in excluded:
                continue
            step = ReplacementStep(
                position=i,
                old_token=seq.tokens[i],
                new_token=tok,
                estimated_score=score,
                actual_loss=0.0,
            )
            edits.append(CandidateEdit(step=step, estimated_loss_delta=score))
            break
    return edits


def select_step_mlm(
    seq: TokenSequence,
    candidates: Sequence[CandidateEdit],
    alt: str,
    model: AssessedModel,
) -> ReplacementStep:
    """Evaluate every candidate's actual loss toward `alt` and keep the minimum.

    Ties break toward the lower position.
    """
    if not candidates:
        raise ValidationError("no candidates to select from")
    best: tuple[float, int, ReplacementStep] | None = None
    for cand in candidates:
        loss = model.loss(apply_replacement(seq, cand.step), alt)
        key = (loss, cand.step.position)
        if best is None or key < (best[0], best[1]):
            best = (loss, cand.step.position, cand.step)
    loss, _, step = best
    return ReplacementStep(
        position=step.position,
        old_token=step.old_token,
        new_token=step.new_token,
        estimated_score=step.estimated_score,
        actual_loss=loss,
    )
