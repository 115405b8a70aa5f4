"""Shared domain types and pure sequence-editing utilities.

Every other module imports from here. All types are immutable value
objects (frozen dataclasses), so they can be shared across threads
without coordination. Serialization helpers (`to_dict`/`from_dict`)
live on the types that get persisted; the append-only logs in
`cfrisk.store` are built from them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

SENTENCE_TERMINATORS = {".", "!", "?"}
ATTACH_LEFT = {".", ",", "!", "?", ";", ":", ")", "]", "}"}
ATTACH_RIGHT = {"(", "[", "{"}

_TOKEN_RE = re.compile(r"\w+(?:'\w+)?|[^\w\s]")


class WorkbenchError(Exception):
    """Base error; `code` keys the structured error bodies served over HTTP."""

    code = "error"


class ValidationError(WorkbenchError):
    code = "invalid"


class NotFoundError(WorkbenchError):
    code = "not_found"


class CapabilityError(WorkbenchError):
    """An adapter lacks a capability the requested operation needs."""

    code = "capability"


@dataclass(frozen=True)
class TokenSequence:
    """An ordered, non-empty sequence of token strings."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.tokens, tuple):
            object.__setattr__(self, "tokens", tuple(self.tokens))
        if len(self.tokens) == 0:
            raise ValidationError("token sequence must be non-empty")
        if any(not isinstance(t, str) or t == "" for t in self.tokens):
            raise ValidationError("tokens must be non-empty strings")

    def __len__(self) -> int:
        return len(self.tokens)

    def text(self) -> str:
        return detokenize(self.tokens)


@dataclass(frozen=True)
class RationaleMask:
    """Per-position editability bits, aligned with one TokenSequence."""

    bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.bits, tuple):
            object.__setattr__(self, "bits", tuple(self.bits))
        if any(b not in (0, 1) for b in self.bits):
            raise ValidationError("mask bits must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)

    def positions(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    def count(self) -> int:
        return sum(self.bits)


@dataclass(frozen=True)
class Instance:
    """A tokenized document with sentence spans and its rationale mask.

    `sentence_spans` must partition [0, len(document)); the mask must be
    the same length as the document.
    """

    id: str
    document: TokenSequence
    sentence_spans: tuple[tuple[int, int], ...]
    mask: RationaleMask
    gold_label: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.sentence_spans, tuple):
            object.__setattr__(
                self, "sentence_spans", tuple((int(s), int(e)) for s, e in self.sentence_spans)
            )
        if len(self.mask) != len(self.document):
            raise ValidationError(
                f"mask length {len(self.mask)} != document length {len(self.document)}"
            )
        cursor = 0
        for start, end in self.sentence_spans:
            if start != cursor or end <= start:
                raise ValidationError("sentence spans must partition the document")
            cursor = end
        if cursor != len(self.document):
            raise ValidationError("sentence spans must cover the whole document")

    def sentence_tokens(self, index: int) -> tuple[str, ...]:
        start, end = self.sentence_spans[index]
        return self.document.tokens[start:end]


@dataclass(frozen=True)
class ReplacementStep:
    """One (position, old token, new token) edit.

    `estimated_score` is the method's ranking score for the edit (the
    first-order loss-delta estimate for gradient search, the fill score
    for masked infill); `actual_loss` is the model loss toward the
    alternative label after applying the edit. Both unitless.
    """

    position: int
    old_token: str
    new_token: str
    estimated_score: float
    actual_loss: float

    def __post_init__(self) -> None:
        if self.old_token == self.new_token:
            raise ValidationError("identity edits are forbidden")

    def to_dict(self) -> dict[str, Any]:
        return {
            "position": self.position,
            "old_token": self.old_token,
            "new_token": self.new_token,
            "estimated_score": self.estimated_score,
            "actual_loss": self.actual_loss,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ReplacementStep":
        return cls(
            position=int(data["position"]),
            old_token=data["old_token"],
            new_token=data["new_token"],
            estimated_score=float(data["estimated_score"]),
            actual_loss=float(data["actual_loss"]),
        )


@dataclass(frozen=True)
class GenerationConfig:
    """Knobs for trail generation.

    `prediction_scope` decides whether a flip is judged on the edited
    sentence (the unit shown to annotators) or the whole document.
    """

    method: str = "hotflip"
    max_steps: int = 5
    top_p_positions: int = 3
    beam_width: int = 3
    fill_top_k: int = 10
    prediction_scope: str = "sentence"

    def __post_init__(self) -> None:
        if self.method not in ("hotflip", "mlm"):
            raise ValidationError(f"unknown method {self.method!r}")
        if self.max_steps < 1 or self.top_p_positions < 1 or self.beam_width < 1:
            raise ValidationError("max_steps, top_p_positions and beam_width must be >= 1")
        if self.prediction_scope not in ("sentence", "document"):
            raise ValidationError("prediction_scope must be 'sentence' or 'document'")

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "max_steps": self.max_steps,
            "top_p_positions": self.top_p_positions,
            "beam_width": self.beam_width,
            "fill_top_k": self.fill_top_k,
            "prediction_scope": self.prediction_scope,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GenerationConfig":
        return cls(
            method=data["method"],
            max_steps=int(data["max_steps"]),
            top_p_positions=int(data["top_p_positions"]),
            beam_width=int(data["beam_width"]),
            fill_top_k=int(data["fill_top_k"]),
            prediction_scope=data.get("prediction_scope", "sentence"),
        )


@dataclass(frozen=True)
class CounterfactualTrail:
    """Ordered single-token edits from an instance toward a prediction flip.

    `model_id` and `seed` are generation metadata: the model the trail
    was produced against and the sampling seed (batch mode), kept so
    risk reports can scope by model and runs can be replayed.
    """

    trail_id: str
    instance_id: str
    sentence_index: int
    method: str
    original_prediction: str
    steps: tuple[ReplacementStep, ...]
    final_prediction: str
    flipped: bool
    config_snapshot: GenerationConfig
    model_id: str | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.steps, tuple):
            object.__setattr__(self, "steps", tuple(self.steps))
        if not 1 <= len(self.steps) <= self.config_snapshot.max_steps:
            raise ValidationError(
                f"trail must have 1..{self.config_snapshot.max_steps} steps, got {len(self.steps)}"
            )
        positions = [s.position for s in self.steps]
        if len(set(positions)) != len(positions):
            raise ValidationError("trail steps must hit distinct positions")
        if self.flipped != (self.final_prediction != self.original_prediction):
            raise ValidationError("flipped flag inconsistent with predictions")

    def to_dict(self) -> dict[str, Any]:
        return {
            "trail_id": self.trail_id,
            "instance_id": self.instance_id,
            "sentence_index": self.sentence_index,
            "method": self.method,
            "original_prediction": self.original_prediction,
            "steps": [s.to_dict() for s in self.steps],
            "final_prediction": self.final_prediction,
            "flipped": self.flipped,
            "config_snapshot": self.config_snapshot.to_dict(),
            "model_id": self.model_id,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CounterfactualTrail":
        return cls(
            trail_id=data["trail_id"],
            instance_id=data["instance_id"],
            sentence_index=int(data["sentence_index"]),
            method=data["method"],
            original_prediction=data["original_prediction"],
            steps=tuple(ReplacementStep.from_dict(s) for s in data["steps"]),
            final_prediction=data["final_prediction"],
            flipped=bool(data["flipped"]),
            config_snapshot=GenerationConfig.from_dict(data["config_snapshot"]),
            model_id=data.get("model_id"),
            seed=data.get("seed"),
        )


@dataclass(frozen=True)
class Rating:
    """One annotator's judgment of a trail, three 1-5 scores."""

    rating_id: str
    trail_id: str
    annotator_id: str
    plausibility: int
    meaningfulness: int
    faithfulness: int
    timestamp: str

    def __post_init__(self) -> None:
        for name in ("plausibility", "meaningfulness", "faithfulness"):
            value = getattr(self, name)
            if not isinstance(value, int) or not 1 <= value <= 5:
                raise ValidationError(f"{name} must be an integer in [1, 5], got {value!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "rating_id": self.rating_id,
            "trail_id": self.trail_id,
            "annotator_id": self.annotator_id,
            "plausibility": self.plausibility,
            "meaningfulness": self.meaningfulness,
            "faithfulness": self.faithfulness,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Rating":
        return cls(
            rating_id=data["rating_id"],
            trail_id=data["trail_id"],
            annotator_id=data["annotator_id"],
            plausibility=int(data["plausibility"]),
            meaningfulness=int(data["meaningfulness"]),
            faithfulness=int(data["faithfulness"]),
            timestamp=data["timestamp"],
        )


def tokenize(text: str) -> TokenSequence:
    """Reference tokenizer: whitespace split with punctuation as own tokens."""
    tokens = _TOKEN_RE.findall(text)
    if not tokens:
        raise ValidationError("text produced no tokens")
    return TokenSequence(tuple(tokens))


def detokenize(tokens: tuple[str, ...] | list[str]) -> str:
    """Render tokens to text.

    Sentence punctuation attaches to the preceding token, brackets to the
    following one, and double quotes toggle between opening (attach right)
    and closing (attach left).
    """
    out: list[str] = []
    quote_open = False
    for tok in tokens:
        if tok == '"':
            if quote_open:
                out[-1] = out[-1] + tok if out else tok
            else:
                out.append(tok)
            quote_open = not quote_open
            continue
        if tok in ATTACH_LEFT and out:
            out[-1] = out[-1] + tok
        elif out and (out[-1] in ATTACH_RIGHT or (out[-1].endswith('"') and quote_open)):
            out[-1] = out[-1] + tok
        else:
            out.append(tok)
    return " ".join(out)


def split_sentences(tokens: tuple[str, ...] | list[str]) -> tuple[tuple[int, int], ...]:
    """Sentence spans by terminator heuristic; always partitions [0, len)."""
    spans: list[tuple[int, int]] = []
    start = 0
    for i, tok in enumerate(tokens):
        if tok in SENTENCE_TERMINATORS:
            spans.append((start, i + 1))
            start = i + 1
    if start < len(tokens):
        spans.append((start, len(tokens)))
    return tuple(spans)


def apply_replacement(seq: TokenSequence, step: ReplacementStep) -> TokenSequence:
    """Apply a single-token edit, checking the step still matches the sequence."""
    if not 0 <= step.position < len(seq):
        raise ValidationError(f"position {step.position} out of range for length {len(seq)}")
    if seq.tokens[step.position] != step.old_token:
        raise ValidationError(
            f"stale edit: expected {step.old_token!r} at {step.position}, "
            f"found {seq.tokens[step.position]!r}"
        )
    tokens = list(seq.tokens)
    tokens[step.position] = step.new_token
    return TokenSequence(tuple(tokens))


def diff_positions(a: TokenSequence, b: TokenSequence) -> set[int]:
    """Indices where two equal-length sequences differ."""
    if len(a) != len(b):
        raise ValidationError(f"length mismatch: {len(a)} vs {len(b)}")
    return {i for i, (x, y) in enumerate(zip(a.tokens, b.tokens)) if x != y}
