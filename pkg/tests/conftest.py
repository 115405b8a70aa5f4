"""Shared fixtures: a small sentiment corpus and a reference model trained on it.

The corpus is built so that "i love this movie ." and "i hate this movie ."
are both training sentences; any model at training accuracy 1.0 therefore
has a known one-edit flip (love -> hate) inside the first sentence.
"""

from __future__ import annotations

import json

import pytest

from cfrisk.core import Instance, RationaleMask, TokenSequence, tokenize
from cfrisk.models import BigramFiller, LinearBagModel
from cfrisk.store import DatasetRecord

POSITIVE_TEXTS = [
    "i love this movie .",
    "i love this film .",
    "a great and wonderful movie .",
    "this film is great .",
    "what a wonderful story .",
    "i enjoyed this movie a lot .",
    "truly great acting and a wonderful plot .",
]

NEGATIVE_TEXTS = [
    "i hate this movie .",
    "i hate this film .",
    "a terrible and boring movie .",
    "this film is terrible .",
    "what a boring story .",
    "i regret watching this movie .",
    "truly awful acting and a boring plot .",
]


def corpus_pairs() -> list[tuple[tuple[str, ...], str]]:
    pairs = [(tokenize(t).tokens, "positive") for t in POSITIVE_TEXTS]
    pairs += [(tokenize(t).tokens, "negative") for t in NEGATIVE_TEXTS]
    return pairs


@pytest.fixture(scope="session")
def toy_corpus() -> list[tuple[tuple[str, ...], str]]:
    return corpus_pairs()


@pytest.fixture(scope="session")
def toy_model(toy_corpus) -> LinearBagModel:
    texts = [toks for toks, _ in toy_corpus]
    labels = [lab for _, lab in toy_corpus]
    model = LinearBagModel.train(texts, labels, embedding_dim=16, seed=7)
    # Fixture precondition, not a test: every downstream oracle assumes
    # training accuracy 1.0 on the corpus.
    for toks, lab in toy_corpus:
        assert model.predict(TokenSequence(toks)).label == lab
    return model


@pytest.fixture(scope="session")
def toy_filler(toy_corpus) -> BigramFiller:
    return BigramFiller.from_corpus([toks for toks, _ in toy_corpus])


@pytest.fixture()
def love_instance() -> Instance:
    doc = tokenize("i love this movie .")
    return Instance(
        id="doc-love",
        document=doc,
        sentence_spans=((0, 5),),
        mask=RationaleMask((0, 1, 0, 1, 0)),
        gold_label="positive",
    )


def make_records() -> list[DatasetRecord]:
    records = []
    for i, text in enumerate(POSITIVE_TEXTS):
        records.append(DatasetRecord(id=f"pos-{i}", label="positive", text=text))
    for i, text in enumerate(NEGATIVE_TEXTS):
        records.append(DatasetRecord(id=f"neg-{i}", label="negative", text=text))
    return records


@pytest.fixture(scope="session")
def toy_records() -> list[DatasetRecord]:
    return make_records()


def write_dataset(path, records) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict()) + "\n")


@pytest.fixture()
def dataset_file(tmp_path, toy_records):
    path = tmp_path / "toy.jsonl"
    write_dataset(path, toy_records)
    return path
