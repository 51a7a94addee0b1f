"""Similarity scorers: hand values, invariants, providers, caching, transport."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opensct import (EmbeddingCache, LexicalFallbackProvider, ProtocolError,
                     RemoteEmbeddingProvider, TransportError, bleu_score, embedding_score,
                     embedding_scorer, exact_score, resolve_provider, rouge_score)
from opensct.similarity import EMBED_URL_ENV, fnv1a_64, make_match_scorer, tokenize


# -- exact --

def test_exact_identity():
    s = "a of b was c before and d afterwards"
    assert exact_score(s, s) == 1.0


def test_exact_normalizes_case_and_whitespace():
    assert exact_score("A of b was c before and d afterwards",
                       "a of b  was c before and d afterwards") == 1.0


def test_exact_inequality():
    assert exact_score("a of b was c before and d afterwards",
                       "a of b was c before and e afterwards") == 0.0


# -- bleu --

def test_bleu_identity():
    assert bleu_score("the cat sat", "the cat sat") == 1.0


def test_bleu_short_candidate_hand_value():
    # brevity penalty exp(1 - 3/2) times unit 1- and 2-gram precisions
    expected = math.exp(1 - 3 / 2)
    assert abs(bleu_score("the cat", "the cat sat") - expected) < 1e-4


def test_bleu_empty_inputs():
    assert bleu_score("", "the cat sat") == 0.0
    assert bleu_score("the cat sat", "") == 0.0


def test_bleu_single_token_candidate():
    assert bleu_score("cat", "the cat sat") == pytest.approx(math.exp(1 - 3))
    assert bleu_score("dog", "the cat sat") == 0.0


def test_bleu_is_directional():
    assert bleu_score("the cat", "the cat sat") != bleu_score("the cat sat", "the cat")


def test_tokenizer_splits_punctuation():
    assert tokenize("Cut in half.") == ["cut", "in", "half", "."]
    assert bleu_score("cut in half.", "cut in half .") == 1.0


# -- rouge --

def test_rouge_identity():
    assert rouge_score("a b c", "a b c") == 1.0


def test_rouge_hand_value():
    # LCS("a b c d", "a x c") = ["a", "c"]; P = 2/4, R = 2/3, F1 = 4/7
    expected = 2 * Fraction(1, 2) * Fraction(2, 3) / (Fraction(1, 2) + Fraction(2, 3))
    assert expected == Fraction(4, 7)
    assert abs(rouge_score("a b c d", "a x c") - float(expected)) < 1e-6


def test_rouge_disjoint_and_empty():
    assert rouge_score("a", "b") == 0.0
    assert rouge_score("", "a") == 0.0
    assert rouge_score("a", "") == 0.0


# -- shared scorer invariants --

_TEXT = st.text(max_size=40)


@settings(max_examples=300, deadline=None)
@given(a=_TEXT, b=_TEXT)
def test_scores_stay_in_unit_range(a, b):
    for fn in (exact_score, bleu_score, rouge_score):
        assert 0.0 <= fn(a, b) <= 1.0


@settings(max_examples=100, deadline=None)
@given(text=st.text(min_size=1, max_size=40).filter(str.strip))
def test_self_identity_all_scorers(text):
    assert exact_score(text, text) == 1.0
    assert bleu_score(text, text) == 1.0 or not tokenize(text)
    assert rouge_score(text, text) == 1.0 or not tokenize(text)


def test_embedding_self_similarity_and_range():
    provider = LexicalFallbackProvider()
    for text in ["hello world", "a of b was c before and d afterwards", ""]:
        assert abs(embedding_score(text, text, provider) - 1.0) <= 1e-6


def test_embedding_symmetry_random_pairs():
    provider = LexicalFallbackProvider()
    cache = EmbeddingCache()
    rng = np.random.default_rng(7)
    vocab = ["red", "blue", "cup", "lid", "oven", "door", "wet", "dry"]
    for _ in range(100):
        a = " ".join(rng.choice(vocab, size=4))
        b = " ".join(rng.choice(vocab, size=4))
        assert abs(embedding_score(a, b, provider, cache) - embedding_score(b, a, provider, cache)) < 1e-9


@settings(max_examples=100, deadline=None)
@given(a=_TEXT, b=_TEXT)
def test_embedding_range_fuzz(a, b):
    provider = LexicalFallbackProvider(dimension=64)
    assert 0.0 <= embedding_score(a, b, provider) <= 1.0


# -- lexical fallback provider --

def test_lexical_vectors_unit_norm_and_deterministic():
    provider = LexicalFallbackProvider()
    texts = ["the lid was closed", "the lid was closed", "oven door open", ""]
    matrix = provider.embed(texts)
    assert matrix.shape == (4, 4096)
    assert np.allclose(np.linalg.norm(matrix, axis=1), 1.0, atol=1e-9)
    assert np.array_equal(matrix[0], matrix[1])
    again = provider.embed(texts)
    assert np.array_equal(matrix, again)


def test_lexical_disjoint_tokens_score_zero():
    # independent oracle: recompute FNV-1a buckets here and verify no collisions
    a, b = "red cup shelf", "blue lid table"
    dim = 4096

    def fnv(word: str) -> int:
        value = 0xCBF29CE484222325
        for byte in word.encode("utf-8"):
            value ^= byte
            value = (value * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
        return value

    buckets_a = {fnv(w) % dim for w in a.split()}
    buckets_b = {fnv(w) % dim for w in b.split()}
    assert not buckets_a & buckets_b, "pick different words: hash collision"
    assert embedding_score(a, b, LexicalFallbackProvider()) == 0.0


def test_fnv_reference_value():
    # published FNV-1a 64-bit test vector
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C


# -- cache --

def test_cache_transparency_and_bit_identical_hits():
    provider = LexicalFallbackProvider()
    cache = EmbeddingCache()
    a, b = "wet towel rack", "dry towel rack"
    with_cache = embedding_score(a, b, provider, cache)
    without_cache = embedding_score(a, b, provider, None)
    assert with_cache == without_cache
    first = cache.lookup([a], provider)[0]
    second = cache.lookup([a], provider)[0]
    assert first is second  # the stored vector object, bit-identical by construction
    assert len(cache) == 2


def test_cached_vectors_are_read_only():
    cache = EmbeddingCache()
    vec = cache.lookup(["x"], LexicalFallbackProvider())[0]
    with pytest.raises(ValueError):
        vec[0] = 5.0


# -- remote provider --

def test_remote_provider_roundtrip_and_batching(embed_stub):
    provider = RemoteEmbeddingProvider(embed_stub.url)
    matrix = provider.embed(["alpha", "beta", "alpha"])
    assert matrix.shape == (3, 8)
    assert np.allclose(np.linalg.norm(matrix, axis=1), 1.0, atol=1e-6)
    assert np.array_equal(matrix[0], matrix[2])
    assert embed_stub.requests == [["alpha", "beta", "alpha"]]  # one POST for the batch
    assert provider.dimension == 8
    assert provider.model == "stub-embedder"


def test_remote_provider_cache_determinism(embed_stub):
    provider = RemoteEmbeddingProvider(embed_stub.url)
    cache = EmbeddingCache()
    first = embedding_score("alpha", "beta", provider, cache)
    second = embedding_score("alpha", "beta", provider, cache)
    assert first == second
    assert len(embed_stub.requests) == 1  # the second score is served from cache


def test_remote_provider_unreachable_names_endpoint():
    provider = RemoteEmbeddingProvider("http://127.0.0.1:9", timeout=0.5)
    with pytest.raises(TransportError, match="127.0.0.1:9"):
        provider.embed(["x"])


def test_remote_provider_http_error(embed_stub):
    embed_stub.set_mode("http-error")
    with pytest.raises(TransportError, match="500"):
        RemoteEmbeddingProvider(embed_stub.url).embed(["x"])


def test_remote_provider_dimension_mismatch(embed_stub):
    embed_stub.set_mode("bad-dimension")
    with pytest.raises(ProtocolError, match="dimension"):
        RemoteEmbeddingProvider(embed_stub.url).embed(["x"])


def test_remote_provider_short_reply(embed_stub):
    embed_stub.set_mode("short-reply")
    with pytest.raises(ProtocolError, match="vectors"):
        RemoteEmbeddingProvider(embed_stub.url).embed(["x", "y"])


def test_remote_provider_rejects_non_unit_vectors(embed_stub):
    embed_stub.set_mode("not-normalized")
    with pytest.raises(ProtocolError, match="unit-norm"):
        RemoteEmbeddingProvider(embed_stub.url).embed(["x"])


def test_remote_dimension_change_across_requests(embed_stub):
    provider = RemoteEmbeddingProvider(embed_stub.url)
    provider.embed(["x"])
    embed_stub.httpd.dimension = 16
    with pytest.raises(ProtocolError, match="dimension"):
        provider.embed(["y"])


# -- provider resolution --

def test_resolve_provider_precedence(monkeypatch):
    monkeypatch.setenv(EMBED_URL_ENV, "http://env:1234")
    provider = resolve_provider("http://flag:5678")
    assert isinstance(provider, RemoteEmbeddingProvider)
    assert provider.endpoint == "http://flag:5678"
    provider = resolve_provider(None)
    assert provider.endpoint == "http://env:1234"


def test_resolve_provider_fallback_notice(monkeypatch):
    monkeypatch.delenv(EMBED_URL_ENV, raising=False)
    notices = []
    provider = resolve_provider(None, notice=notices.append)
    assert isinstance(provider, LexicalFallbackProvider)
    assert notices and "fallback" in notices[0]


def test_make_match_scorer_rejects_unknown():
    with pytest.raises(ValueError, match="unknown match scorer"):
        make_match_scorer("levenshtein")


def test_scorer_objects_and_reversal():
    bleu = make_match_scorer("bleu")
    assert not bleu.symmetric
    reversed_bleu = bleu.reversed()
    assert reversed_bleu("the cat sat", "the cat") == bleu("the cat", "the cat sat")
    exact = make_match_scorer("exact")
    assert exact.reversed() is exact


def test_embedding_scorer_warm_batches(embed_stub):
    scorer = embedding_scorer(RemoteEmbeddingProvider(embed_stub.url))
    scorer.warm(["a", "b", "c"])
    assert scorer("a", "b") >= 0.0
    assert len(embed_stub.requests) == 1
