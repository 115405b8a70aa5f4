"""Acceptance suite: every release criterion as one test with a printed verdict.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion. Oracles are brute-force enumerations independent of the code
paths they check.
"""

from __future__ import annotations

import json
import random
import socket
import subprocess
import sys
import time
from contextlib import contextmanager

import httpx
import numpy as np
import pytest

from cfrisk.core import (
    CounterfactualTrail,
    GenerationConfig,
    Instance,
    Rating,
    RationaleMask,
    ReplacementStep,
    TokenSequence,
    apply_replacement,
    diff_positions,
)
from cfrisk.engine import alternative_from_prediction, generate_batch, generate_trail
from cfrisk.mlm import PromptTemplate, build_prompt, fill_candidates, select_step_mlm
from cfrisk.models import BigramFiller, LinearBagModel, UNKNOWN_TOKEN, gradcheck
from cfrisk.rationale import instance_from_record
from cfrisk.risk import aggregate_risk, annotator_risk
from cfrisk.store import DatasetRecord, Store


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


# -- shared random fixtures ---------------------------------------------------

VOCAB = tuple(f"w{i:03d}" for i in range(100))
LABELS = ("L0", "L1")


def random_reference_model(seed: int, dim: int = 8) -> LinearBagModel:
    rng = np.random.default_rng(seed)
    emb = rng.normal(size=(len(VOCAB), dim)) / np.sqrt(dim)
    weights = rng.normal(size=(len(LABELS), dim))
    return LinearBagModel(LABELS, VOCAB, emb, weights)


def random_case(rng: random.Random):
    length = rng.randint(5, 30)
    tokens = tuple(rng.choice(VOCAB) for _ in range(length))
    bits = [1 if rng.random() < 0.4 else 0 for _ in range(length)]
    if not any(bits):
        bits[rng.randrange(length)] = 1
    doc = TokenSequence(tokens)
    return Instance(
        id=f"case-{rng.randrange(10**9)}",
        document=doc,
        sentence_spans=((0, length),),
        mask=RationaleMask(tuple(bits)),
    )


def brute_force_one_edits(model, instance):
    """Every (position, token) single edit inside the mask with its exact loss."""
    seq = instance.document
    original = model.predict(seq)
    alt = alternative_from_prediction(model.label_set, original)
    results = []
    for i in instance.mask.positions():
        for tok in model.vocabulary:
            if tok == seq.tokens[i] or tok == UNKNOWN_TOKEN:
                continue
            edited = apply_replacement(seq, ReplacementStep(i, seq.tokens[i], tok, 0.0, 0.0))
            results.append(
                (model.loss(edited, alt), i, tok, model.predict(edited).label != original.label)
            )
    return original, alt, results


def random_corpus(seed: int, n_docs: int = 8):
    rng = random.Random(seed)
    vocab = [f"w{i:03d}" for i in range(30)]
    records = []
    for d in range(n_docs):
        length = rng.randint(6, 14)
        tokens = [rng.choice(vocab) for _ in range(length)]
        records.append(
            DatasetRecord(
                id=f"doc-{seed}-{d}",
                label=rng.choice(["L0", "L1"]),
                text=" ".join(tokens),
                tokens=tuple(tokens),
            )
        )
    return records


def random_small_model(seed: int):
    rng = np.random.default_rng(seed)
    vocab = tuple(f"w{i:03d}" for i in range(30))
    emb = rng.normal(size=(30, 6))
    weights = rng.normal(size=(2, 6))
    return LinearBagModel(("L0", "L1"), vocab, emb, weights)


# -- criteria -----------------------------------------------------------------


class TestHotflipExactness:
    def test_step_one_matches_brute_force(self):
        with criterion("hotflip exactness oracle (50 seeded cases, < 30 s)"):
            started = time.monotonic()
            rng = random.Random(2024)
            model = random_reference_model(99)
            for _ in range(50):
                instance = random_case(rng)
                r = instance.mask.count()
                config = GenerationConfig(max_steps=5, top_p_positions=r)
                trail = generate_trail(instance, 0, config, model)
                _, _, edits = brute_force_one_edits(model, instance)
                best_loss, best_pos, best_tok, _ = min(edits)
                step = trail.steps[0]
                assert (step.position, step.new_token) == (best_pos, best_tok)
                assert step.actual_loss == pytest.approx(best_loss, abs=1e-9)
            elapsed = time.monotonic() - started
            assert elapsed < 30.0, f"exactness oracle took {elapsed:.1f}s"


class TestFlipCompleteness:
    def test_one_edit_flips_are_found_in_one_step(self):
        with criterion("flip completeness (all oracle-flippable cases flip in 1 step)"):
            rng = random.Random(4048)
            model = random_reference_model(99)
            flippable = 0
            for _ in range(50):
                instance = random_case(rng)
                _, _, edits = brute_force_one_edits(model, instance)
                oracle_flips = any(flip for _, _, _, flip in edits)
                r = instance.mask.count()
                trail = generate_trail(
                    instance, 0, GenerationConfig(max_steps=5, top_p_positions=r), model
                )
                if oracle_flips:
                    flippable += 1
                    assert trail.flipped, f"oracle found a flip, trail missed it ({instance.id})"
                    assert len(trail.steps) == 1
            assert flippable >= 10, "fixture too easy: almost no flippable cases"


class TestGradientCheck:
    def test_every_shipped_differentiable_adapter(self, toy_model):
        with criterion("gradcheck < 1e-5 on 20 random sequences"):
            rng = random.Random(7)
            adapters = [toy_model, random_reference_model(1), random_reference_model(2)]
            for adapter in adapters:
                vocab = adapter.vocabulary
                for _ in range(20):
                    tokens = tuple(rng.choice(vocab) for _ in range(rng.randint(3, 12)))
                    target = rng.choice(adapter.label_set)
                    err = gradcheck(adapter, TokenSequence(tokens), target)
                    assert err < 1e-5, f"gradcheck {err} on {tokens}"


class TestTrailInvariants:
    def check_trail(self, trail, instance, model, filler):
        assert 1 <= len(trail.steps) <= 5
        positions = [s.position for s in trail.steps]
        assert len(set(positions)) == len(positions)
        start, end = instance.sentence_spans[trail.sentence_index]
        for step in trail.steps:
            assert start <= step.position < end
            assert instance.mask.bits[step.position] == 1
        # flip flag consistent with a fresh model prediction
        sentence = TokenSequence(instance.document.tokens[start:end])
        edited = sentence
        for step in trail.steps:
            edited = apply_replacement(
                edited,
                ReplacementStep(step.position - start, step.old_token, step.new_token,
                                step.estimated_score, step.actual_loss),
            )
        assert model.predict(edited).label == trail.final_prediction
        assert trail.flipped == (trail.final_prediction != trail.original_prediction)
        assert len(diff_positions(sentence, edited)) == len(trail.steps)
        # deterministic replay: regenerating the same request reproduces the trail
        again = generate_trail(
            instance, trail.sentence_index, trail.config_snapshot, model, filler,
            model_id=trail.model_id, seed=trail.seed,
        )
        assert again.to_dict() == trail.to_dict()

    def test_five_hundred_trails_across_both_methods(self):
        with criterion("trail invariant property suite (>= 500 trails, both methods)"):
            total = 0
            for corpus_seed in range(10):
                records = random_corpus(corpus_seed)
                model = random_small_model(corpus_seed + 100)
                filler = BigramFiller.from_corpus([r.token_list() for r in records])
                instances = [instance_from_record(r, model, ratio=0.5) for r in records]
                for method in ("hotflip", "mlm"):
                    config = GenerationConfig(method=method, max_steps=5, top_p_positions=3)
                    trails = generate_batch(
                        instances, config, model,
                        filler if method == "mlm" else None,
                        limit=25, seed=corpus_seed,
                    )
                    by_id = {i.id: i for i in instances}
                    for trail in trails:
                        self.check_trail(
                            trail, by_id[trail.instance_id], model,
                            filler if method == "mlm" else None,
                        )
                    total += len(trails)
            assert total >= 500, f"only {total} trails generated"
            print(f"  ({total} trails checked)", end=" ")


class TestMlmSelection:
    def test_selection_is_enumeration_minimum(self):
        with criterion("mlm selection oracle (50 seeded cases)"):
            rng = random.Random(31)
            for case in range(50):
                records = random_corpus(case)
                model = random_small_model(case + 500)
                filler = BigramFiller.from_corpus([r.token_list() for r in records])
                record = records[rng.randrange(len(records))]
                tokens = record.token_list()
                bits = [1 if rng.random() < 0.5 else 0 for _ in tokens]
                if not any(bits):
                    bits[0] = 1
                seq = TokenSequence(tokens)
                mask = RationaleMask(tuple(bits))
                alt = rng.choice(model.label_set)
                candidates = fill_candidates(seq, mask, alt, filler, PromptTemplate())
                if not candidates:
                    continue
                chosen = select_step_mlm(seq, candidates, alt, model)
                # independent enumeration of every candidate's actual loss
                enumerated = [
                    (model.loss(apply_replacement(seq, c.step), alt), c.step.position)
                    for c in candidates
                ]
                assert (chosen.actual_loss, chosen.position) == min(enumerated)

    def test_prompt_byte_identity(self):
        with criterion("prompt template byte-identity"):
            seq = TokenSequence(("this", "movie", "is", "great"))
            prompt = build_prompt(seq, 3, "negative", PromptTemplate())
            assert prompt.text() == (
                '"this movie is [mask]" the sentiment of this review is "negative"'
            )


class TestRiskFormula:
    def rating(self, annotator, f):
        return Rating(
            rating_id=f"r-{random.randrange(10**9)}", trail_id="t", annotator_id=annotator,
            plausibility=3, meaningfulness=3, faithfulness=f,
            timestamp="2024-01-01T00:00:00+00:00",
        )

    def test_formula_and_weighting(self):
        with criterion("risk formula exact values + pooled identity (100 fixtures)"):
            assert annotator_risk([self.rating("a", 3), self.rating("a", 5)]).risk == 1.0
            assert annotator_risk([self.rating("a", 5)] * 3).risk == 0.0
            assert annotator_risk([self.rating("a", 1), self.rating("a", 1)]).risk == 4.0
            rng = random.Random(77)
            for _ in range(100):
                groups = {
                    f"ann{k}": [self.rating(f"ann{k}", rng.randint(1, 5))
                                for _ in range(rng.randint(1, 12))]
                    for k in range(rng.randint(1, 5))
                }
                per = [annotator_risk(rs) for rs in groups.values()]
                pooled = sum(5 - r.faithfulness for rs in groups.values() for r in rs) / sum(
                    len(rs) for rs in groups.values()
                )
                assert abs(aggregate_risk(per) - pooled) < 1e-9


class TestPersistenceRoundTrips:
    def random_trail(self, rng):
        n_steps = rng.randint(1, 5)
        positions = rng.sample(range(10), n_steps)
        steps = tuple(
            ReplacementStep(p, f"old{p}", f"new{p}", rng.uniform(-2, 2), rng.uniform(-2, 2))
            for p in positions
        )
        flipped = rng.random() < 0.5
        return CounterfactualTrail(
            trail_id=f"t-{rng.randrange(10**9):09d}",
            instance_id=f"doc-{rng.randrange(100)}",
            sentence_index=rng.randrange(3),
            method=rng.choice(["hotflip", "mlm"]),
            original_prediction="L0",
            steps=steps,
            final_prediction="L1" if flipped else "L0",
            flipped=flipped,
            config_snapshot=GenerationConfig(
                method=rng.choice(["hotflip", "mlm"]),
                max_steps=5,
                top_p_positions=rng.randint(1, 5),
                beam_width=rng.randint(1, 4),
            ),
            model_id=rng.choice([None, "m-1"]),
            seed=rng.choice([None, rng.randrange(1000)]),
        )

    def random_rating(self, rng, trail_id):
        return Rating(
            rating_id=f"r-{rng.randrange(10**9):09d}",
            trail_id=trail_id,
            annotator_id=f"ann-{rng.randrange(5)}",
            plausibility=rng.randint(1, 5),
            meaningfulness=rng.randint(1, 5),
            faithfulness=rng.randint(1, 5),
            timestamp="2024-01-01T00:00:00+00:00",
        )

    def test_serialize_parse_identity(self, tmp_path):
        with criterion("persistence round-trips (100 random fixtures)"):
            rng = random.Random(13)
            for _ in range(100):
                trail = self.random_trail(rng)
                assert CounterfactualTrail.from_dict(
                    json.loads(json.dumps(trail.to_dict()))
                ) == trail
                rating = self.random_rating(rng, trail.trail_id)
                assert Rating.from_dict(json.loads(json.dumps(rating.to_dict()))) == rating

    def test_export_filters_and_determinism(self, tmp_path, toy_model, toy_records):
        with criterion("export filters behave per contract"):
            from conftest import write_dataset
            from cfrisk.rationale import instance_from_record

            dataset_path = tmp_path / "toy.jsonl"
            write_dataset(dataset_path, toy_records)
            store = Store(tmp_path / "data")
            store.ingest_dataset(dataset_path)
            rng = random.Random(5)
            for record in toy_records[:6]:
                instance = instance_from_record(record, toy_model, ratio=0.4)
                trail = generate_trail(
                    instance, 0, GenerationConfig(top_p_positions=2), toy_model,
                    model_id="m-acc",
                )
                store.save_trail(trail)
                for _ in range(2):
                    store.save_rating(self.random_rating(rng, trail.trail_id))
            everything = list(store.export_counterfactuals())
            assert len(everything) == 12
            for p in (2, 4):
                subset = list(store.export_counterfactuals(min_plausibility=p))
                assert all(r["plausibility"] >= p for r in subset)
                assert len(subset) == sum(1 for r in everything if r["plausibility"] >= p)
            flipped = list(store.export_counterfactuals(flipped_only=True))
            assert all(r["orig_pred"] != r["final_pred"] for r in flipped)
            assert list(store.export_counterfactuals()) == everything  # deterministic


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class TestApiContract:
    def test_live_service_end_to_end(self, tmp_path, toy_model):
        with criterion("live API end-to-end (< 5 s) with idempotent generation"):
            port = free_port()
            proc = subprocess.Popen(
                [sys.executable, "-m", "cfrisk.cli", "serve", "--port", str(port),
                 "--data-dir", str(tmp_path / "data")],
                stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
            )
            base = f"http://127.0.0.1:{port}"
            try:
                with httpx.Client(base_url=base, timeout=10.0) as client:
                    for _ in range(100):
                        try:
                            if client.get("/health").status_code == 200:
                                break
                        except httpx.TransportError:
                            time.sleep(0.1)
                    else:
                        pytest.fail("service did not come up")

                    weights = {
                        "labels": list(toy_model.label_set),
                        "vocabulary": list(toy_model.vocabulary),
                        "embedding_dim": toy_model.embedding_dim,
                        "embeddings": toy_model._emb.tolist(),
                        "class_weights": toy_model._weights.tolist(),
                    }
                    model_id = client.post(
                        "/models", json={"kind": "ref:linear", "weights": weights}
                    ).json()["model_id"]
                    docs = "\n".join(
                        json.dumps({"id": f"d{i}", "text": text, "label": "positive",
                                    "rationale_spans": [[1, 2], [3, 4]]})
                        for i, text in enumerate(["i love this movie .", "i enjoyed this movie a lot ."])
                    )
                    dataset_id = client.post("/datasets", content=docs.encode()).json()["dataset_id"]

                    started = time.monotonic()
                    session = client.post("/sessions", json={
                        "annotator_id": "ann-live", "model_id": model_id,
                        "dataset_id": dataset_id, "seed": 5,
                    }).json()
                    sid = session["session_id"]
                    doc = client.get(f"/sessions/{sid}/document").json()
                    assert doc["rationale_sentences"] == [0]
                    gen = client.post(f"/sessions/{sid}/counterfactuals",
                                      json={"sentence_index": 0, "method": "hotflip"}).json()
                    trail_id = gen["trail"]["trail_id"]
                    rated = client.post(f"/sessions/{sid}/ratings", json={
                        "trail_id": trail_id, "plausibility": 4,
                        "meaningfulness": 4, "faithfulness": 3,
                    })
                    assert rated.status_code == 200
                    risk = client.get("/risk", params={"model_id": model_id}).json()
                    elapsed = time.monotonic() - started
                    assert risk["aggregate"] == 2.0
                    assert risk["total_count"] == 1
                    assert elapsed < 5.0, f"end-to-end flow took {elapsed:.1f}s"

                    again = client.post(f"/sessions/{sid}/counterfactuals",
                                        json={"sentence_index": 0, "method": "hotflip"}).json()
                    assert again["trail"] == gen["trail"]
            finally:
                proc.terminate()
                proc.wait(timeout=10)
