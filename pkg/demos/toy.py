"""Tiny shared fixture for the demo scripts: a sentiment corpus and a model."""

from cfrisk import DatasetRecord, LinearBagModel, tokenize

REVIEWS = [
    ("i love this movie .", "positive"),
    ("i love this film .", "positive"),
    ("a great and wonderful movie .", "positive"),
    ("this film is great .", "positive"),
    ("what a wonderful story .", "positive"),
    ("i enjoyed this movie a lot .", "positive"),
    ("truly great acting and a wonderful plot .", "positive"),
    ("i hate this movie .", "negative"),
    ("i hate this film .", "negative"),
    ("a terrible and boring movie .", "negative"),
    ("this film is terrible .", "negative"),
    ("what a boring story .", "negative"),
    ("i regret watching this movie .", "negative"),
    ("truly awful acting and a boring plot .", "negative"),
]


def records() -> list[DatasetRecord]:
    return [
        DatasetRecord(id=f"review-{i}", label=label, text=text)
        for i, (text, label) in enumerate(REVIEWS)
    ]


def train_model(embedding_dim: int = 16, seed: int = 7) -> LinearBagModel:
    texts = [tokenize(text).tokens for text, _ in REVIEWS]
    labels = [label for _, label in REVIEWS]
    return LinearBagModel.train(texts, labels, embedding_dim=embedding_dim, seed=seed)
