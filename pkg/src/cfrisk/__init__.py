"""Rationale-constrained counterfactual generation and model risk scoring."""

from .core import (
    CounterfactualTrail,
    GenerationConfig,
    Instance,
    Rating,
    RationaleMask,
    ReplacementStep,
    TokenSequence,
    apply_replacement,
    detokenize,
    diff_positions,
    split_sentences,
    tokenize,
)
from .engine import alternative_label, generate_batch, generate_trail, replay_trail
from .models import BigramFiller, LinearBagModel, Prediction, gradcheck
from .rationale import mask_from_spans, merge_custom, rationale_sentences, saliency_mask
from .risk import AnnotatorRisk, RiskReport, aggregate_risk, annotator_risk, risk_report
from .store import DatasetRecord, Store

__all__ = [
    "AnnotatorRisk",
    "BigramFiller",
    "CounterfactualTrail",
    "DatasetRecord",
    "GenerationConfig",
    "Instance",
    "LinearBagModel",
    "Prediction",
    "Rating",
    "RationaleMask",
    "ReplacementStep",
    "RiskReport",
    "Store",
    "TokenSequence",
    "aggregate_risk",
    "alternative_label",
    "annotator_risk",
    "apply_replacement",
    "detokenize",
    "diff_positions",
    "generate_batch",
    "generate_trail",
    "gradcheck",
    "mask_from_spans",
    "merge_custom",
    "rationale_sentences",
    "replay_trail",
    "risk_report",
    "saliency_mask",
    "split_sentences",
    "tokenize",
]
