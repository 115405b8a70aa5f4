"""Dataset ingestion, persistence, and the counterfactual dataset export.

Each entity kind (datasets, sessions, trails, ratings) gets its own
append-only JSONL log under the data directory; an in-memory index is
rebuilt from the logs at startup. Writes are serialized by one lock per
store, appended and flushed before the call returns.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .core import (
    CounterfactualTrail,
    NotFoundError,
    Rating,
    ValidationError,
    detokenize,
    split_sentences,
    tokenize,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetRecord:
    """One document as shipped in a dataset file."""

    id: str
    label: str
    text: str = ""
    tokens: tuple[str, ...] | None = None
    rationale_spans: tuple[tuple[int, int], ...] | None = None
    sentence_spans: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        if not self.text and not self.tokens:
            raise ValidationError(f"record {self.id!r} has neither text nor tokens")

    def token_list(self) -> tuple[str, ...]:
        return self.tokens if self.tokens else tokenize(self.text).tokens

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id, "text": self.text, "label": self.label}
        if self.tokens:
            out["tokens"] = list(self.tokens)
        if self.rationale_spans is not None:
            out["rationale_spans"] = [list(s) for s in self.rationale_spans]
        if self.sentence_spans is not None:
            out["sentence_spans"] = [list(s) for s in self.sentence_spans]
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "DatasetRecord":
        if "id" not in data or "label" not in data:
            raise ValidationError("record needs 'id' and 'label' fields")
        spans = data.get("rationale_spans")
        sspans = data.get("sentence_spans")
        return cls(
            id=str(data["id"]),
            label=str(data["label"]),
            text=data.get("text", ""),
            tokens=tuple(data["tokens"]) if data.get("tokens") else None,
            rationale_spans=tuple((int(a), int(b)) for a, b in spans) if spans else None,
            sentence_spans=tuple((int(a), int(b)) for a, b in sspans) if sspans else None,
        )


@dataclass(frozen=True)
class Dataset:
    dataset_id: str
    content_hash: str
    label_vocab: tuple[str, ...]
    records: tuple[DatasetRecord, ...]

    def get_record(self, record_id: str) -> DatasetRecord:
        for r in self.records:
            if r.id == record_id:
                return r
        raise NotFoundError(f"no record {record_id!r} in dataset {self.dataset_id}")

    def corpus(self) -> list[tuple[str, ...]]:
        return [r.token_list() for r in self.records]

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset_id": self.dataset_id,
            "content_hash": self.content_hash,
            "label_vocab": list(self.label_vocab),
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Dataset":
        return cls(
            dataset_id=data["dataset_id"],
            content_hash=data["content_hash"],
            label_vocab=tuple(data["label_vocab"]),
            records=tuple(DatasetRecord.from_dict(r) for r in data["records"]),
        )


@dataclass(frozen=True)
class Session:
    session_id: str
    annotator_id: str
    model_id: str
    dataset_id: str
    created_at: str
    instance_id: str
    seed: int
    trail_ids: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "annotator_id": self.annotator_id,
            "model_id": self.model_id,
            "dataset_id": self.dataset_id,
            "created_at": self.created_at,
            "instance_id": self.instance_id,
            "seed": self.seed,
            "trail_ids": list(self.trail_ids),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Session":
        return cls(
            session_id=data["session_id"],
            annotator_id=data["annotator_id"],
            model_id=data["model_id"],
            dataset_id=data["dataset_id"],
            created_at=data["created_at"],
            instance_id=data["instance_id"],
            seed=int(data["seed"]),
            trail_ids=tuple(data.get("trail_ids", [])),
        )


def parse_jsonl(text: str) -> Iterator[tuple[int, dict[str, Any]]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: malformed record ({exc.msg})") from exc


def read_dataset_file(source: str | Path | bytes, fmt: str = "jsonl") -> list[DatasetRecord]:
    """Parse a dataset file; errors name the offending line."""
    if fmt != "jsonl":
        raise ValidationError(f"unsupported dataset format {fmt!r}")
    text = source.decode() if isinstance(source, bytes) else Path(source).read_text()
    records = []
    for lineno, data in parse_jsonl(text):
        try:
            records.append(DatasetRecord.from_dict(data))
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from exc
    if not records:
        raise ValidationError("empty dataset")
    return records


def convert_eraser(docs_dir: str | Path, annotations_path: str | Path) -> list[DatasetRecord]:
    """Convert an ERASER-style layout (docs/ + annotations jsonl) to records.

    Each annotation line holds `annotation_id`, `classification`, and
    `evidences` with token offsets into the matching document file, which
    is whitespace-tokenized one sentence per line.
    """
    docs_dir = Path(docs_dir)
    records = []
    for _, ann in parse_jsonl(Path(annotations_path).read_text()):
        doc_id = ann["annotation_id"]
        doc_path = docs_dir / doc_id
        if not doc_path.exists():
            raise NotFoundError(f"document file {doc_id!r} missing")
        lines = [ln.split() for ln in doc_path.read_text().splitlines() if ln.strip()]
        tokens: list[str] = []
        sentence_spans: list[tuple[int, int]] = []
        for ln in lines:
            sentence_spans.append((len(tokens), len(tokens) + len(ln)))
            tokens.extend(ln)
        spans = []
        for group in ann.get("evidences", []):
            for ev in group:
                spans.append((int(ev["start_token"]), int(ev["end_token"])))
        records.append(
            DatasetRecord(
                id=doc_id,
                label=str(ann["classification"]),
                text=" ".join(tokens),
                tokens=tuple(tokens),
                rationale_spans=tuple(spans) if spans else None,
                sentence_spans=tuple(sentence_spans),
            )
        )
    return records


class Store:
    """Append-only persistence with an in-memory index."""

    def __init__(self, data_dir: str | Path) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._datasets: dict[str, Dataset] = {}
        self._sessions: dict[str, Session] = {}
        self._trails: dict[str, CounterfactualTrail] = {}
        self._ratings: dict[str, Rating] = {}
        self._models: dict[str, dict[str, Any]] = {}
        self._counter = 0
        self._replay_logs()

    def _log_path(self, kind: str) -> Path:
        return self.data_dir / f"{kind}.jsonl"

    def _replay_logs(self) -> None:
        loaders = {
            "datasets": lambda d: self._datasets.__setitem__(d["dataset_id"], Dataset.from_dict(d)),
            "sessions": lambda d: self._sessions.__setitem__(d["session_id"], Session.from_dict(d)),
            "trails": lambda d: self._trails.__setitem__(
                d["trail_id"], CounterfactualTrail.from_dict(d)
            ),
            "ratings": lambda d: self._ratings.__setitem__(d["rating_id"], Rating.from_dict(d)),
            "models": lambda d: self._models.__setitem__(d["model_id"], d),
        }
        for kind, load in loaders.items():
            path = self._log_path(kind)
            if not path.exists():
                continue
            for _, data in parse_jsonl(path.read_text()):
                load(data)
        self._counter = len(self._ratings)

    def _append(self, kind: str, payload: dict[str, Any]) -> None:
        with self._log_path(kind).open("a") as fh:
            fh.write(json.dumps(payload) + "\n")
            fh.flush()

    # -- datasets ----------------------------------------------------------

    def ingest_dataset(self, source: str | Path | bytes, fmt: str = "jsonl") -> str:
        records = read_dataset_file(source, fmt)
        raw = source if isinstance(source, bytes) else Path(source).read_bytes()
        content_hash = hashlib.sha256(raw).hexdigest()[:16]
        with self._lock:
            if any(d.content_hash == content_hash for d in self._datasets.values()):
                log.warning("dataset with hash %s already ingested", content_hash)
            dataset_id = f"ds-{content_hash}-{len(self._datasets)}"
            dataset = Dataset(
                dataset_id=dataset_id,
                content_hash=content_hash,
                label_vocab=tuple(sorted({r.label for r in records})),
                records=tuple(records),
            )
            self._datasets[dataset_id] = dataset
            self._append("datasets", dataset.to_dict())
        return dataset_id

    def get_dataset(self, dataset_id: str) -> Dataset:
        if dataset_id not in self._datasets:
            raise NotFoundError(f"unknown dataset {dataset_id!r}")
        return self._datasets[dataset_id]

    def find_record(self, record_id: str) -> DatasetRecord:
        for dataset in self._datasets.values():
            for r in dataset.records:
                if r.id == record_id:
                    return r
        raise NotFoundError(f"no dataset record {record_id!r}")

    # -- models ------------------------------------------------------------

    def register_model(self, model_id: str, descriptor: dict[str, Any]) -> None:
        with self._lock:
            if model_id not in self._models:
                record = {"model_id": model_id, **descriptor}
                self._models[model_id] = record
                self._append("models", record)

    def model_descriptor(self, model_id: str) -> dict[str, Any]:
        if model_id not in self._models:
            raise NotFoundError(f"unknown model {model_id!r}")
        return self._models[model_id]

    def model_ids(self) -> list[str]:
        return sorted(self._models)

    # -- sessions ----------------------------------------------------------

    def save_session(self, session: Session) -> str:
        if session.model_id not in self._models:
            raise NotFoundError(f"unknown model {session.model_id!r}")
        if session.dataset_id not in self._datasets:
            raise NotFoundError(f"unknown dataset {session.dataset_id!r}")
        with self._lock:
            self._sessions[session.session_id] = session
            self._append("sessions", session.to_dict())
        return session.session_id

    def get_session(self, session_id: str) -> Session:
        if session_id not in self._sessions:
            raise NotFoundError(f"unknown session {session_id!r}")
        return self._sessions[session_id]

    def attach_trail(self, session_id: str, trail_id: str) -> Session:
        with self._lock:
            session = self.get_session(session_id)
            if trail_id in session.trail_ids:
                return session
            updated = Session(
                session_id=session.session_id,
                annotator_id=session.annotator_id,
                model_id=session.model_id,
                dataset_id=session.dataset_id,
                created_at=session.created_at,
                instance_id=session.instance_id,
                seed=session.seed,
                trail_ids=session.trail_ids + (trail_id,),
            )
            self._sessions[session_id] = updated
            self._append("sessions", updated.to_dict())
            return updated

    # -- trails and ratings -------------------------------------------------

    def save_trail(self, trail: CounterfactualTrail) -> str:
        self.find_record(trail.instance_id)  # referential integrity
        with self._lock:
            if trail.trail_id in self._trails:
                return trail.trail_id
            self._trails[trail.trail_id] = trail
            self._append("trails", trail.to_dict())
        return trail.trail_id

    def get_trail(self, trail_id: str) -> CounterfactualTrail:
        if trail_id not in self._trails:
            raise NotFoundError(f"unknown trail {trail_id!r}")
        return self._trails[trail_id]

    def trails(self) -> list[CounterfactualTrail]:
        return list(self._trails.values())

    def next_rating_id(self) -> str:
        with self._lock:
            self._counter += 1
            return f"r-{self._counter:06d}"

    def save_rating(self, rating: Rating) -> str:
        if rating.trail_id not in self._trails:
            raise NotFoundError(f"rating references unknown trail {rating.trail_id!r}")
        with self._lock:
            self._ratings[rating.rating_id] = rating
            self._append("ratings", rating.to_dict())
        return rating.rating_id

    def ratings(self) -> list[Rating]:
        return list(self._ratings.values())

    # -- export --------------------------------------------------------------

    def export_counterfactuals(
        self,
        min_plausibility: int | None = None,
        min_meaningfulness: int | None = None,
        flipped_only: bool = False,
    ) -> Iterator[dict[str, Any]]:
        """One record per (trail, rating) pair passing the filters."""
        for rating in sorted(self._ratings.values(), key=lambda r: r.rating_id):
            trail = self._trails.get(rating.trail_id)
            if trail is None:
                continue
            if flipped_only and not trail.flipped:
                continue
            if min_plausibility is not None and rating.plausibility < min_plausibility:
                continue
            if min_meaningfulness is not None and rating.meaningfulness < min_meaningfulness:
                continue
            record = self.find_record(trail.instance_id)
            tokens = record.token_list()
            spans = record.sentence_spans or split_sentences(tokens)
            start, end = spans[trail.sentence_index]
            original = list(tokens[start:end])
            edited = list(original)
            for step in trail.steps:
                edited[step.position - start] = step.new_token
            yield {
                "trail_id": trail.trail_id,
                "original": detokenize(original),
                "counterfactual": detokenize(edited),
                "edits": [
                    {
                        "position": s.position,
                        "old_token": s.old_token,
                        "new_token": s.new_token,
                    }
                    for s in trail.steps
                ],
                "orig_pred": trail.original_prediction,
                "final_pred": trail.final_prediction,
                "plausibility": rating.plausibility,
                "meaningfulness": rating.meaningfulness,
                "faithfulness": rating.faithfulness,
                "annotator_id": rating.annotator_id,
            }


def write_trails(trails: Iterable[CounterfactualTrail], path: str | Path) -> int:
    """Write trail records to a standalone JSONL file; returns the count."""
    n = 0
    with Path(path).open("w") as fh:
        for trail in trails:
            fh.write(json.dumps(trail.to_dict()) + "\n")
            n += 1
    return n


def read_trails(path: str | Path) -> list[CounterfactualTrail]:
    return [CounterfactualTrail.from_dict(d) for _, d in parse_jsonl(Path(path).read_text())]


def read_ratings(path: str | Path) -> list[Rating]:
    return [Rating.from_dict(d) for _, d in parse_jsonl(Path(path).read_text())]
