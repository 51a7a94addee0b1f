"""Pairwise sentence similarity scorers and embedding providers.

Four scorer families: exact match, sentence-level smoothed BLEU, ROUGE-L
F-measure, and embedding cosine. Every score lives in [0, 1] and every
scorer gives 1 for a sentence scored against itself. BLEU and ROUGE are
called as scorer(candidate, reference); exact and embedding are symmetric.

The embedding backend is pluggable: a remote HTTP service speaking the
/embed protocol, or a dependency-free lexical fallback (hashed bag of
word unigrams) so everything runs offline. Embeddings are cached per
provider; scorers are immutable after construction and thread-safe.
"""

from __future__ import annotations

import logging
import math
import os
import re
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import requests

from .errors import ProtocolError, TransportError

logger = logging.getLogger(__name__)

EMBED_URL_ENV = "OPENSCT_EMBED_URL"

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_WORD_RE = re.compile(r"\w+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace with punctuation split into separate tokens."""
    return _TOKEN_RE.findall(text.lower())


def _squash(text: str) -> str:
    return " ".join(text.lower().split())


def exact_score(a: str, b: str) -> float:
    """1 if the two sentences are equal after case folding and whitespace collapsing, else 0."""
    return 1.0 if _squash(a) == _squash(b) else 0.0


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_score(candidate: str, reference: str) -> float:
    """Sentence-level BLEU-N, N = min(4, candidate length).

    Geometric mean of clipped n-gram precisions with add-one smoothing for
    n >= 2, times the brevity penalty exp(1 - r/c) when the candidate is
    shorter than the reference. Empty input on either side scores 0.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    max_n = min(4, len(cand))
    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(cand, n)
        ref_counts = _ngram_counts(ref, n)
        matches = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        total = len(cand) - n + 1
        if n == 1:
            if matches == 0:
                return 0.0
            precision = matches / total
        else:
            precision = (matches + 1) / (total + 1)
        log_sum += math.log(precision)
    score = math.exp(log_sum / max_n)
    if len(cand) < len(ref):
        score *= math.exp(1.0 - len(ref) / len(cand))
    return min(score, 1.0)


def _lcs_length(a: list[str], b: list[str]) -> int:
    if len(b) > len(a):
        a, b = b, a
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_score(candidate: str, reference: str) -> float:
    """ROUGE-L F-measure (beta = 1) over the longest common token subsequence."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


# -- embedding providers --

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a_64(data: bytes) -> int:
    value = _FNV_OFFSET
    for byte in data:
        value ^= byte
        value = (value * _FNV_PRIME) & _FNV_MASK
    return value


class LexicalFallbackProvider:
    """Deterministic offline embeddings: hashed bag of lowercase word unigrams.

    Each word token is FNV-1a hashed modulo the dimension; bucket counts are
    L2-normalized. Texts with no word tokens map to a fixed basis vector so
    every output is unit-norm.
    """

    source = "lexical-fallback"

    def __init__(self, dimension: int = 4096):
        self.dimension = dimension
        self._empty_bucket = fnv1a_64(b"") % dimension

    @property
    def model(self) -> str:
        return f"lexical-fnv1a-{self.dimension}"

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension), dtype=np.float64)
        for row, text in enumerate(texts):
            words = _WORD_RE.findall(text.lower())
            if not words:
                out[row, self._empty_bucket] = 1.0
                continue
            for word in words:
                out[row, fnv1a_64(word.encode("utf-8")) % self.dimension] += 1.0
            out[row] /= np.linalg.norm(out[row])
        return out


class RemoteEmbeddingProvider:
    """Client for the /embed HTTP protocol (see the embedding service schema).

    Batches every requested text into one POST; verifies the reply is
    order-preserving in length, dimension-consistent and unit-normalized.
    Requests are serialized so the provider is safe to share across threads.
    """

    source = "remote-service"

    def __init__(self, endpoint: str, timeout: float = 30.0, session: requests.Session | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()
        self._lock = threading.Lock()
        self._dimension: int | None = None
        self._model: str | None = None

    @property
    def dimension(self) -> int | None:
        return self._dimension

    @property
    def model(self) -> str:
        if self._model is None:
            try:  # best effort; embed() still reports transport failures properly
                response = self._session.get(f"{self.endpoint}/health", timeout=self.timeout)
                if response.status_code == 200:
                    self._model = str(response.json().get("model", "")) or None
            except (requests.RequestException, ValueError):
                pass
        return self._model or self.endpoint

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        texts = list(texts)
        if not texts:
            dim = self._dimension or 0
            return np.zeros((0, dim), dtype=np.float64)
        with self._lock:
            try:
                response = self._session.post(
                    f"{self.endpoint}/embed", json={"texts": texts}, timeout=self.timeout
                )
            except requests.RequestException as exc:
                raise TransportError(f"embedding service unreachable at {self.endpoint}: {exc}") from exc
        if response.status_code != 200:
            raise TransportError(
                f"embedding service at {self.endpoint} answered HTTP {response.status_code}: {response.text[:200]}"
            )
        try:
            payload = response.json()
            embeddings = payload["embeddings"]
            dimension = int(payload["dimension"])
            self._model = str(payload.get("model", self._model or ""))
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed reply from {self.endpoint}/embed: {exc}") from exc
        if len(embeddings) != len(texts):
            raise ProtocolError(
                f"{self.endpoint}/embed returned {len(embeddings)} vectors for {len(texts)} texts"
            )
        if self._dimension is None:
            self._dimension = dimension
        elif dimension != self._dimension:
            raise ProtocolError(
                f"{self.endpoint}/embed dimension changed from {self._dimension} to {dimension}"
            )
        matrix = np.asarray(embeddings, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != dimension:
            raise ProtocolError(
                f"{self.endpoint}/embed vector shape {matrix.shape} does not match dimension {dimension}"
            )
        norms = np.linalg.norm(matrix, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            worst = float(np.max(np.abs(norms - 1.0)))
            raise ProtocolError(f"{self.endpoint}/embed vectors are not unit-norm (worst deviation {worst:.2e})")
        return matrix


class EmbeddingCache:
    """Text -> vector store; hits return the vector stored at first embed, bit-identical.

    Reads are lock-free (dict access is atomic under the GIL); writes are
    serialized. Vectors are marked read-only before caching.
    """

    def __init__(self):
        self._store: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._store)

    def lookup(self, texts: Sequence[str], provider) -> list[np.ndarray]:
        missing = [t for t in dict.fromkeys(texts) if t not in self._store]
        if missing:
            vectors = provider.embed(missing)
            with self._lock:
                for text, vector in zip(missing, vectors):
                    if text not in self._store:
                        vector = np.array(vector, copy=True)
                        vector.setflags(write=False)
                        self._store[text] = vector
        return [self._store[t] for t in texts]


def embedding_score(a: str, b: str, provider, cache: EmbeddingCache | None = None) -> float:
    """Cosine similarity of the two unit embedding vectors, clamped to [0, 1]."""
    if cache is not None:
        va, vb = cache.lookup([a, b], provider)
    else:
        matrix = provider.embed([a, b])
        va, vb = matrix[0], matrix[1]
    cosine = float(np.dot(va, vb))
    return min(max(cosine, 0.0), 1.0)


# -- scorer objects --

@dataclass(frozen=True)
class SimilarityScorer:
    """A named pairwise scorer, called as scorer(candidate, reference).

    ``warm`` (optional) batch-embeds texts ahead of pairwise scoring so a
    remote provider sees one request instead of many.
    """

    name: str
    symmetric: bool
    fn: Callable[[str, str], float] = field(repr=False)
    warm: Callable[[Sequence[str]], None] | None = field(default=None, repr=False)

    def __call__(self, candidate: str, reference: str) -> float:
        return self.fn(candidate, reference)

    def reversed(self) -> "SimilarityScorer":
        """The same scorer with candidate/reference roles exchanged."""
        if self.symmetric:
            return self
        fn = self.fn
        return SimilarityScorer(name=f"{self.name}-reversed", symmetric=False,
                                fn=lambda c, r: fn(r, c), warm=self.warm)


def exact_scorer() -> SimilarityScorer:
    return SimilarityScorer(name="exact", symmetric=True, fn=exact_score)


def bleu_scorer() -> SimilarityScorer:
    return SimilarityScorer(name="bleu", symmetric=False, fn=bleu_score)


def rouge_scorer() -> SimilarityScorer:
    # symmetry of ROUGE-L F1 is not relied upon anywhere; treated as directional
    return SimilarityScorer(name="rouge", symmetric=False, fn=rouge_score)


def embedding_scorer(provider=None, cache: EmbeddingCache | bool = True) -> SimilarityScorer:
    """Cosine-similarity scorer over a provider, with shared caching by default."""
    if provider is None:
        provider = LexicalFallbackProvider()
    if cache is True:
        cache = EmbeddingCache()
    elif cache is False:
        cache = None

    def score(a: str, b: str) -> float:
        return embedding_score(a, b, provider, cache)

    def warm(texts: Sequence[str]) -> None:
        if cache is not None and texts:
            cache.lookup(list(texts), provider)

    return SimilarityScorer(name="embedding", symmetric=True, fn=score, warm=warm)


MATCH_SCORERS: dict[str, Callable[[], SimilarityScorer]] = {
    "exact": exact_scorer,
    "bleu": bleu_scorer,
    "rouge": rouge_scorer,
}


def make_match_scorer(name: str) -> SimilarityScorer:
    try:
        return MATCH_SCORERS[name]()
    except KeyError:
        raise ValueError(f"unknown match scorer {name!r}; choose from {sorted(MATCH_SCORERS)}") from None


def resolve_provider(endpoint: str | None = None, notice: Callable[[str], None] | None = None):
    """Pick the embedding provider: explicit endpoint, then $OPENSCT_EMBED_URL, then fallback.

    ``notice`` (e.g. the CLI's stderr printer) is told when the lexical
    fallback is selected.
    """
    endpoint = endpoint or os.environ.get(EMBED_URL_ENV)
    if endpoint:
        return RemoteEmbeddingProvider(endpoint)
    message = "no embedding endpoint configured; using offline lexical-fallback embeddings"
    if notice is not None:
        notice(message)
    else:
        logger.info(message)
    return LexicalFallbackProvider()
