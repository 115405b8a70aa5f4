"""Model contracts plus desk-scale reference adapters.

`AssessedModel` is the classifier under assessment, `FillModel` the
blank-filling proposer. The shipped references are:

* `LinearBagModel` — mean-pooled embedding bag with a linear head and a
  margin loss. The loss is linear in every single token embedding, so
  first-order estimates of single-edit loss deltas are exact, which is
  what makes brute-force equivalence tests possible.
* `BigramFiller` — interpolated unigram/bigram counts with add-one
  smoothing over an ingested corpus, backing off to unigrams when the
  left context is empty or unseen.

External adapters (`ext:<url>`) proxy the same operations over HTTP.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import httpx
import numpy as np

from .core import CapabilityError, NotFoundError, TokenSequence, ValidationError

UNKNOWN_TOKEN = "<unk>"
MASK_TOKEN = "[mask]"

CAP_GRADIENTS = "gradients"
CAP_CONCURRENT = "concurrent"


@dataclass(frozen=True)
class Prediction:
    """Predicted label with per-label scores, higher = more likely.

    `class_scores` is keyed in label-set order; the label is the argmax
    with ties broken by the lowest label index.
    """

    label: str
    class_scores: dict[str, float]

    def __post_init__(self) -> None:
        best = max(self.class_scores.values())
        first_argmax = next(k for k, v in self.class_scores.items() if v == best)
        if self.label != first_argmax:
            raise ValidationError("prediction label must be the (first) argmax of class scores")


def make_prediction(label_set: Sequence[str], scores: Sequence[float]) -> Prediction:
    ordered = {label: float(s) for label, s in zip(label_set, scores)}
    idx = int(np.argmax(np.asarray(scores, dtype=float)))
    return Prediction(label=label_set[idx], class_scores=ordered)


class AssessedModel(ABC):
    """Contract for the classifier under assessment."""

    @property
    @abstractmethod
    def label_set(self) -> tuple[str, ...]: ...

    @property
    @abstractmethod
    def vocabulary(self) -> tuple[str, ...]: ...

    @property
    @abstractmethod
    def embedding_dim(self) -> int: ...

    @abstractmethod
    def predict(self, seq: TokenSequence) -> Prediction: ...

    @abstractmethod
    def loss(self, seq: TokenSequence, target: str) -> float:
        """Loss toward `target`; lower means the model favors `target` more."""

    def capabilities(self) -> frozenset[str]:
        return frozenset()

    # Differentiable adapters (capability "gradients") implement these.
    def grad_embedding(self, seq: TokenSequence, target: str) -> np.ndarray:
        raise CapabilityError("adapter does not expose gradients")

    def embed(self, token: str) -> np.ndarray:
        raise CapabilityError("adapter does not expose embeddings")

    def loss_from_vectors(self, vectors: np.ndarray, target: str) -> float:
        """Loss as a function of raw per-position embedding vectors."""
        raise CapabilityError("adapter does not expose a vector-space loss")


class FillModel(ABC):
    """Contract for blank-filling proposers."""

    @property
    @abstractmethod
    def vocabulary(self) -> tuple[str, ...]: ...

    @property
    def mask_token(self) -> str:
        return MASK_TOKEN

    @abstractmethod
    def fill_scores(self, seq_with_mask: TokenSequence, mask_position: int) -> dict[str, float]:
        """Score every vocabulary token as a fill for the masked position."""


class LinearBagModel(AssessedModel):
    """Mean-pooled embedding bag with a linear head and margin loss.

    logit(c) = w_c . mean(e_i); loss(x, t) = max_{c != t} logit(c) - logit(t).
    The gradient of the loss w.r.t. the embedding at any position is
    (w_o - w_t) / l where o is the highest-scoring non-target label, so it
    is identical across positions and exact to first order for single
    token replacements (in the binary case, globally linear).
    """

    def __init__(
        self,
        labels: Sequence[str],
        vocab: Sequence[str],
        embeddings: np.ndarray,
        class_weights: np.ndarray,
    ) -> None:
        if len(labels) < 2:
            raise ValidationError("need at least two labels")
        if UNKNOWN_TOKEN in vocab:
            raise ValidationError(f"{UNKNOWN_TOKEN!r} is reserved")
        self._labels = tuple(labels)
        self._vocab = tuple(vocab)
        self._emb = np.asarray(embeddings, dtype=float)
        self._weights = np.asarray(class_weights, dtype=float)
        if self._emb.shape[0] != len(self._vocab):
            raise ValidationError("one embedding row per vocabulary token required")
        if self._weights.shape != (len(self._labels), self._emb.shape[1]):
            raise ValidationError("class_weights must be |labels| x embedding_dim")
        self._index = {tok: i for i, tok in enumerate(self._vocab)}
        self._unk = np.zeros(self._emb.shape[1])

    @property
    def label_set(self) -> tuple[str, ...]:
        return self._labels

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return self._vocab

    @property
    def embedding_dim(self) -> int:
        return int(self._emb.shape[1])

    def capabilities(self) -> frozenset[str]:
        return frozenset({CAP_GRADIENTS, CAP_CONCURRENT})

    def embed(self, token: str) -> np.ndarray:
        idx = self._index.get(token)
        if idx is None:
            return self._unk
        return self._emb[idx]

    def _vectors(self, seq: TokenSequence) -> np.ndarray:
        return np.stack([self.embed(t) for t in seq.tokens])

    def _logits(self, vectors: np.ndarray) -> np.ndarray:
        return self._weights @ vectors.mean(axis=0)

    def predict(self, seq: TokenSequence) -> Prediction:
        return make_prediction(self._labels, self._logits(self._vectors(seq)))

    def _target_index(self, target: str) -> int:
        try:
            return self._labels.index(target)
        except ValueError:
            raise NotFoundError(f"unknown label {target!r}") from None

    def loss_from_vectors(self, vectors: np.ndarray, target: str) -> float:
        t = self._target_index(target)
        logits = self._logits(np.asarray(vectors, dtype=float))
        others = np.delete(logits, t)
        return float(others.max() - logits[t])

    def loss(self, seq: TokenSequence, target: str) -> float:
        return self.loss_from_vectors(self._vectors(seq), target)

    def grad_embedding(self, seq: TokenSequence, target: str) -> np.ndarray:
        t = self._target_index(target)
        logits = self._logits(self._vectors(seq))
        masked = logits.copy()
        masked[t] = -np.inf
        o = int(np.argmax(masked))
        grad_row = (self._weights[o] - self._weights[t]) / len(seq)
        return np.tile(grad_row, (len(seq), 1))

    @classmethod
    def train(
        cls,
        texts: Sequence[Sequence[str]],
        labels: Sequence[str],
        embedding_dim: int = 16,
        seed: int = 0,
        lr: float = 0.5,
        max_epochs: int = 200,
    ) -> "LinearBagModel":
        """Fit class weights by perceptron updates over frozen random embeddings.

        Stops at the first epoch with zero training mistakes; raises if the
        corpus is not separated within `max_epochs`.
        """
        label_set = tuple(sorted(set(labels)))
        vocab = tuple(sorted({t for toks in texts for t in toks}))
        rng = np.random.default_rng(seed)
        emb = rng.normal(size=(len(vocab), embedding_dim)) / np.sqrt(embedding_dim)
        weights = np.zeros((len(label_set), embedding_dim))
        model = cls(label_set, vocab, emb, weights)
        index = {lab: i for i, lab in enumerate(label_set)}
        feats = [model._vectors(TokenSequence(tuple(toks))).mean(axis=0) for toks in texts]
        for _ in range(max_epochs):
            mistakes = 0
            for f, lab in zip(feats, labels):
                scores = model._weights @ f
                pred = int(np.argmax(scores))
                gold = index[lab]
                if pred != gold:
                    model._weights[gold] += lr * f
                    model._weights[pred] -= lr * f
                    mistakes += 1
            if mistakes == 0:
                return model
        raise ValidationError(f"training did not converge in {max_epochs} epochs")

    def save(self, path: str | Path) -> None:
        payload = {
            "labels": list(self._labels),
            "vocabulary": list(self._vocab),
            "embedding_dim": self.embedding_dim,
            "embeddings": self._emb.tolist(),
            "class_weights": self._weights.tolist(),
        }
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def load(cls, source: str | Path | Mapping[str, Any]) -> "LinearBagModel":
        data = source if isinstance(source, Mapping) else json.loads(Path(source).read_text())
        return cls(
            labels=data["labels"],
            vocab=data["vocabulary"],
            embeddings=np.asarray(data["embeddings"], dtype=float),
            class_weights=np.asarray(data["class_weights"], dtype=float),
        )


class BigramFiller(FillModel):
    """Corpus-statistics filler: add-one smoothed unigram/bigram interpolation.

    score(v | prev) = w * P1(v | prev) + (1 - w) * P0(v) when `prev` was seen
    in the corpus, else exactly P0(v). P0 and P1 both use add-one smoothing
    over the corpus vocabulary.
    """

    def __init__(
        self,
        unigrams: Counter,
        bigrams: Counter,
        bigram_weight: float = 0.7,
    ) -> None:
        if not unigrams:
            raise ValidationError("filler needs a non-empty corpus")
        if not 0.0 <= bigram_weight <= 1.0:
            raise ValidationError("bigram_weight must be in [0, 1]")
        self._uni = unigrams
        self._bi = bigrams
        self._w = bigram_weight
        self._vocab = tuple(sorted(unigrams))
        self._total = sum(unigrams.values())
        self._context_totals = Counter()
        for (prev, _), c in bigrams.items():
            self._context_totals[prev] += c

    @classmethod
    def from_corpus(cls, texts: Iterable[Sequence[str]], bigram_weight: float = 0.7) -> "BigramFiller":
        uni: Counter = Counter()
        bi: Counter = Counter()
        for toks in texts:
            uni.update(toks)
            bi.update(zip(toks, toks[1:]))
        return cls(uni, bi, bigram_weight)

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return self._vocab

    def unigram_scores(self) -> dict[str, float]:
        v = len(self._vocab)
        return {tok: (self._uni[tok] + 1) / (self._total + v) for tok in self._vocab}

    def fill_scores(self, seq_with_mask: TokenSequence, mask_position: int) -> dict[str, float]:
        if not 0 <= mask_position < len(seq_with_mask):
            raise ValidationError(f"mask position {mask_position} out of range")
        if seq_with_mask.tokens[mask_position] != self.mask_token:
            raise ValidationError(f"no {self.mask_token!r} token at position {mask_position}")
        uni = self.unigram_scores()
        prev = seq_with_mask.tokens[mask_position - 1] if mask_position > 0 else None
        if prev is None or self._context_totals[prev] == 0:
            return uni
        v = len(self._vocab)
        denom = self._context_totals[prev] + v
        return {
            tok: self._w * ((self._bi[(prev, tok)] + 1) / denom) + (1 - self._w) * uni[tok]
            for tok in self._vocab
        }


def gradcheck(
    model: AssessedModel,
    seq: TokenSequence,
    target: str,
    h: float = 1e-4,
    eps: float = 1e-8,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Perturbs each per-position embedding coordinate by +-h and compares
    (f(+h) - f(-h)) / 2h against `grad_embedding`, relative error
    |analytic - fd| / (|fd| + eps).
    """
    if CAP_GRADIENTS not in model.capabilities():
        raise CapabilityError("gradcheck needs a differentiable adapter")
    analytic = np.asarray(model.grad_embedding(seq, target), dtype=float)
    vectors = np.stack([model.embed(t) for t in seq.tokens]).astype(float)
    worst = 0.0
    for i in range(vectors.shape[0]):
        for k in range(vectors.shape[1]):
            bumped = vectors.copy()
            bumped[i, k] += h
            up = model.loss_from_vectors(bumped, target)
            bumped[i, k] -= 2 * h
            down = model.loss_from_vectors(bumped, target)
            fd = (up - down) / (2 * h)
            err = abs(analytic[i, k] - fd) / (abs(fd) + eps)
            worst = max(worst, err)
    return worst


class ExternalModel(AssessedModel):
    """HTTP proxy for an assessed model served elsewhere.

    Protocol: GET /health returns labels, vocabulary, embedding_dim and
    capabilities; POST /predict, /loss, /grad, /embed mirror the local
    operations with JSON bodies.
    """

    def __init__(self, base_url: str, client: httpx.Client | None = None) -> None:
        self._client = client or httpx.Client(base_url=base_url, timeout=10.0)
        try:
            meta = self._get_json("/health")
        except httpx.HTTPError as exc:
            raise NotFoundError(f"health probe failed for {base_url}: {exc}") from exc
        self._labels = tuple(meta["labels"])
        self._vocab = tuple(meta["vocabulary"])
        self._dim = int(meta["embedding_dim"])
        self._caps = frozenset(meta.get("capabilities", []))

    def _get_json(self, path: str) -> dict[str, Any]:
        resp = self._client.get(path)
        resp.raise_for_status()
        return resp.json()

    def _post_json(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        resp = self._client.post(path, json=payload)
        resp.raise_for_status()
        return resp.json()

    @property
    def label_set(self) -> tuple[str, ...]:
        return self._labels

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return self._vocab

    @property
    def embedding_dim(self) -> int:
        return self._dim

    def capabilities(self) -> frozenset[str]:
        return self._caps

    def predict(self, seq: TokenSequence) -> Prediction:
        data = self._post_json("/predict", {"tokens": list(seq.tokens)})
        return Prediction(label=data["label"], class_scores=data["class_scores"])

    def loss(self, seq: TokenSequence, target: str) -> float:
        data = self._post_json("/loss", {"tokens": list(seq.tokens), "target": target})
        return float(data["loss"])

    def grad_embedding(self, seq: TokenSequence, target: str) -> np.ndarray:
        if CAP_GRADIENTS not in self._caps:
            raise CapabilityError("external adapter does not expose gradients")
        data = self._post_json("/grad", {"tokens": list(seq.tokens), "target": target})
        return np.asarray(data["gradients"], dtype=float)

    def embed(self, token: str) -> np.ndarray:
        data = self._post_json("/embed", {"token": token})
        return np.asarray(data["vector"], dtype=float)


class ExternalFiller(FillModel):
    """HTTP proxy for a fill model: GET /health, POST /fill."""

    def __init__(self, base_url: str, client: httpx.Client | None = None) -> None:
        self._client = client or httpx.Client(base_url=base_url, timeout=10.0)
        try:
            resp = self._client.get("/health")
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise NotFoundError(f"health probe failed for {base_url}: {exc}") from exc
        meta = resp.json()
        self._vocab = tuple(meta["vocabulary"])
        self._mask = meta.get("mask_token", MASK_TOKEN)

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return self._vocab

    @property
    def mask_token(self) -> str:
        return self._mask

    def fill_scores(self, seq_with_mask: TokenSequence, mask_position: int) -> dict[str, float]:
        resp = self._client.post(
            "/fill", json={"tokens": list(seq_with_mask.tokens), "position": mask_position}
        )
        resp.raise_for_status()
        return {k: float(v) for k, v in resp.json()["scores"].items()}


def resolve_model(descriptor: str | Mapping[str, Any], *, client: httpx.Client | None = None) -> AssessedModel:
    """Build an assessed model from an adapter descriptor.

    Accepted forms: "ref:linear:<weights.json>", "ext:<url>", or a dict
    {"kind": "ref:linear", "weights": <path-or-inline>} / {"kind": "ext:<url>"}.
    """
    if isinstance(descriptor, str):
        if descriptor.startswith("ref:linear:"):
            return LinearBagModel.load(descriptor[len("ref:linear:"):])
        if descriptor.startswith("ext:"):
            return ExternalModel(descriptor[len("ext:"):], client=client)
        raise NotFoundError(f"unknown model descriptor {descriptor!r}")
    kind = descriptor.get("kind", "")
    if kind == "ref:linear":
        return LinearBagModel.load(descriptor["weights"])
    if kind.startswith("ext:"):
        return ExternalModel(kind[len("ext:"):], client=client)
    raise NotFoundError(f"unknown adapter kind {kind!r}")


def resolve_filler(
    descriptor: str,
    corpus: Iterable[Sequence[str]] | None = None,
    *,
    client: httpx.Client | None = None,
) -> FillModel:
    """Build a fill model: "ref:filler" from corpus statistics, or "ext:<url>"."""
    if descriptor == "ref:filler":
        if corpus is None:
            raise ValidationError("ref:filler needs an ingested corpus")
        return BigramFiller.from_corpus(corpus)
    if descriptor.startswith("ext:"):
        return ExternalFiller(descriptor[len("ext:"):], client=client)
    raise NotFoundError(f"unknown filler descriptor {descriptor!r}")
