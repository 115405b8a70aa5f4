import pytest

from cfrisk.core import (
    CounterfactualTrail,
    GenerationConfig,
    Instance,
    Rating,
    RationaleMask,
    ReplacementStep,
    TokenSequence,
    ValidationError,
    apply_replacement,
    detokenize,
    diff_positions,
    split_sentences,
    tokenize,
)


def step(position, old, new, est=0.0, actual=0.0):
    return ReplacementStep(position, old, new, est, actual)


class TestApplyReplacement:
    def test_single_edit(self):
        seq = TokenSequence(("i", "love", "this", "movie"))
        out = apply_replacement(seq, step(1, "love", "hate"))
        assert out.tokens == ("i", "hate", "this", "movie")
        assert seq.tokens == ("i", "love", "this", "movie")  # input untouched

    def test_identity_edit_rejected(self):
        with pytest.raises(ValidationError):
            step(1, "love", "love")

    def test_involution(self):
        seq = TokenSequence(("i", "love", "this", "movie"))
        edited = apply_replacement(seq, step(1, "love", "hate"))
        back = apply_replacement(edited, step(1, "hate", "love"))
        assert back == seq

    def test_position_out_of_range(self):
        with pytest.raises(ValidationError):
            apply_replacement(TokenSequence(("a", "b")), step(5, "a", "c"))

    def test_stale_old_token(self):
        with pytest.raises(ValidationError, match="stale"):
            apply_replacement(TokenSequence(("a", "b")), step(0, "x", "c"))


class TestDiffPositions:
    def test_identical(self):
        seq = TokenSequence(("a", "b", "c"))
        assert diff_positions(seq, seq) == set()

    def test_single_difference(self):
        a = TokenSequence(("a", "b", "c"))
        b = TokenSequence(("a", "x", "c"))
        assert diff_positions(a, b) == {1}

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            diff_positions(TokenSequence(("a",)), TokenSequence(("a", "b")))

    def test_trail_replay_diff_size_equals_steps(self):
        # Oracle: replay distinct-position steps, diff must count them.
        seq = TokenSequence(("i", "love", "this", "movie", "a", "lot"))
        steps = [step(1, "love", "hate"), step(3, "movie", "film"), step(5, "lot", "bit")]
        edited = seq
        for s in steps:
            edited = apply_replacement(edited, s)
        assert diff_positions(seq, edited) == {1, 3, 5}
        assert len(diff_positions(seq, edited)) == len(steps)


class TestTokenization:
    def test_punctuation_split(self):
        assert tokenize("great movie!").tokens == ("great", "movie", "!")

    def test_detokenize_attaches_punctuation(self):
        assert detokenize(("great", "movie", "!")) == "great movie!"

    def test_quote_pairing(self):
        text = '"negative" label'
        assert detokenize(tokenize(text).tokens) == text

    def test_empty_text_rejected(self):
        with pytest.raises(ValidationError):
            tokenize("   ")

    def test_split_sentences_terminators(self):
        toks = tokenize("good . bad ! why ?").tokens
        assert split_sentences(toks) == ((0, 2), (2, 4), (4, 6))

    def test_split_sentences_trailing_fragment(self):
        toks = ("no", "terminator", "here")
        assert split_sentences(toks) == ((0, 3),)


class TestTypes:
    def test_empty_sequence_rejected(self):
        with pytest.raises(ValidationError):
            TokenSequence(())

    def test_mask_bits_validated(self):
        with pytest.raises(ValidationError):
            RationaleMask((0, 2))

    def test_instance_mask_length_must_match(self):
        doc = TokenSequence(("a", "b"))
        with pytest.raises(ValidationError):
            Instance("x", doc, ((0, 2),), RationaleMask((1,)))

    def test_instance_spans_must_partition(self):
        doc = TokenSequence(("a", "b", "c"))
        with pytest.raises(ValidationError):
            Instance("x", doc, ((0, 2),), RationaleMask((1, 0, 0)))

    def test_rating_score_bounds(self):
        with pytest.raises(ValidationError):
            Rating("r1", "t1", "ann", plausibility=0, meaningfulness=3, faithfulness=3,
                   timestamp="now")

    def test_config_method_validated(self):
        with pytest.raises(ValidationError):
            GenerationConfig(method="rand")

    def test_trail_invariants(self):
        cfg = GenerationConfig(max_steps=2)
        s1 = step(0, "a", "b", actual=0.5)
        with pytest.raises(ValidationError):  # flipped flag inconsistent
            CounterfactualTrail(
                trail_id="t", instance_id="i", sentence_index=0, method="hotflip",
                original_prediction="pos", steps=(s1,), final_prediction="pos",
                flipped=True, config_snapshot=cfg,
            )
        with pytest.raises(ValidationError):  # duplicate positions
            CounterfactualTrail(
                trail_id="t", instance_id="i", sentence_index=0, method="hotflip",
                original_prediction="pos", steps=(s1, step(0, "b", "c")),
                final_prediction="pos", flipped=False, config_snapshot=cfg,
            )
        with pytest.raises(ValidationError):  # over the step cap
            CounterfactualTrail(
                trail_id="t", instance_id="i", sentence_index=0, method="hotflip",
                original_prediction="pos",
                steps=(s1, step(1, "b", "c"), step(2, "c", "d")),
                final_prediction="pos", flipped=False, config_snapshot=cfg,
            )

    def test_trail_roundtrip(self):
        cfg = GenerationConfig()
        trail = CounterfactualTrail(
            trail_id="t", instance_id="i", sentence_index=0, method="mlm",
            original_prediction="pos", steps=(step(3, "movie", "film", 0.2, -0.1),),
            final_prediction="neg", flipped=True, config_snapshot=cfg, model_id="m",
            seed=42,
        )
        assert CounterfactualTrail.from_dict(trail.to_dict()) == trail
