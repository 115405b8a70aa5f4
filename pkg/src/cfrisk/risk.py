"""Risk scores from annotator ratings.

An annotator's risk around an instance is the mean shortfall of their
faithfulness ratings from the top score: sum(5 - f) / count. The
model-level estimate is the average of annotator risks weighted by how
many counterfactuals each annotator rated, which equals the pooled
sum(5 - f) / N over all ratings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Sequence

from .core import Rating, ValidationError

if TYPE_CHECKING:
    from .store import Store


@dataclass(frozen=True)
class AnnotatorRisk:
    annotator_id: str
    risk: float
    count: int

    def to_dict(self) -> dict[str, Any]:
        return {"annotator_id": self.annotator_id, "risk": self.risk, "count": self.count}


@dataclass(frozen=True)
class RiskReport:
    model_id: str
    instance_id: str | None
    per_annotator: tuple[AnnotatorRisk, ...]
    aggregate: float
    total_count: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "scope": {"model_id": self.model_id, "instance_id": self.instance_id},
            "per_annotator": [a.to_dict() for a in self.per_annotator],
            "aggregate": self.aggregate,
            "total_count": self.total_count,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RiskReport":
        return cls(
            model_id=data["scope"]["model_id"],
            instance_id=data["scope"].get("instance_id"),
            per_annotator=tuple(
                AnnotatorRisk(a["annotator_id"], float(a["risk"]), int(a["count"]))
                for a in data["per_annotator"]
            ),
            aggregate=float(data["aggregate"]),
            total_count=int(data["total_count"]),
        )


def annotator_risk(ratings: Sequence[Rating]) -> AnnotatorRisk:
    """sum(5 - faithfulness) / count over one annotator's ratings."""
    if not ratings:
        raise ValidationError("no ratings for annotator risk")
    annotators = {r.annotator_id for r in ratings}
    if len(annotators) != 1:
        raise ValidationError(f"mixed annotators in one risk computation: {sorted(annotators)}")
    shortfall = sum(5 - r.faithfulness for r in ratings)
    return AnnotatorRisk(
        annotator_id=ratings[0].annotator_id,
        risk=shortfall / len(ratings),
        count=len(ratings),
    )


def aggregate_risk(per_annotator: Sequence[AnnotatorRisk]) -> float:
    """Count-weighted mean of annotator risks."""
    if not per_annotator:
        raise ValidationError("no annotator risks to aggregate")
    total = sum(a.count for a in per_annotator)
    return sum(a.risk * a.count for a in per_annotator) / total


def report_from_ratings(
    ratings: Sequence[Rating],
    model_id: str,
    instance_id: str | None = None,
) -> RiskReport:
    """Assemble a report from an already-scoped set of ratings."""
    if not ratings:
        return RiskReport(model_id, instance_id, (), 0.0, 0)
    by_annotator: dict[str, list[Rating]] = {}
    for r in ratings:
        by_annotator.setdefault(r.annotator_id, []).append(r)
    per = tuple(annotator_risk(rs) for _, rs in sorted(by_annotator.items()))
    return RiskReport(
        model_id=model_id,
        instance_id=instance_id,
        per_annotator=per,
        aggregate=aggregate_risk(per),
        total_count=sum(a.count for a in per),
    )


def risk_report(
    store: "Store",
    model_id: str,
    instance_id: str | None = None,
    min_plausibility: int | None = None,
) -> RiskReport:
    """Report over ratings whose trail belongs to the given model scope.

    With `instance_id`, only ratings on trails generated from that
    instance count. `min_plausibility` optionally drops low-plausibility
    ratings from the estimate; by default every rated counterfactual
    counts. An empty scope yields an empty report rather than an error.
    """
    selected: list[Rating] = []
    for rating in store.ratings():
        trail = store.get_trail(rating.trail_id)
        if trail.model_id != model_id:
            continue
        if instance_id is not None and trail.instance_id != instance_id:
            continue
        if min_plausibility is not None and rating.plausibility < min_plausibility:
            continue
        selected.append(rating)
    return report_from_ratings(selected, model_id, instance_id)
