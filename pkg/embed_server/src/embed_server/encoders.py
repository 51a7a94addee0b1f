"""Encoder backends for the embedding service.

Two families, selected by model id:

* ``hash:<dim>`` — dependency-free hashed word-unigram encoder (FNV-1a
  buckets, L2-normalized). Deterministic and instant to load, used for
  offline operation and tests.
* anything else — a sentence-transformers model id, loaded in eval mode on
  CPU so repeated encodings of the same text are bit-identical.
"""

from __future__ import annotations

import re

import numpy as np

DEFAULT_MODEL = "stsb-distilroberta-base-v2"

_WORD_RE = re.compile(r"\w+")
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = 0xFFFFFFFFFFFFFFFF


def _fnv1a(data: bytes) -> int:
    value = _FNV_OFFSET
    for byte in data:
        value ^= byte
        value = (value * _FNV_PRIME) & _FNV_MASK
    return value


class HashedUnigramEncoder:
    """Counts of FNV-hashed lowercase word unigrams; rows are unit vectors."""

    def __init__(self, dimension: int = 512):
        if dimension < 2:
            raise ValueError("dimension must be at least 2")
        self.dimension = dimension
        self.model_id = f"hash:{dimension}"
        self._empty_bucket = _fnv1a(b"") % dimension

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension), dtype=np.float64)
        for row, text in enumerate(texts):
            words = _WORD_RE.findall(text.lower())
            if not words:
                out[row, self._empty_bucket] = 1.0
                continue
            for word in words:
                out[row, _fnv1a(word.encode("utf-8")) % self.dimension] += 1.0
        return out


class SentenceTransformerEncoder:
    """Thin wrapper over a sentence-transformers model, pinned to CPU eval mode."""

    def __init__(self, model_id: str = DEFAULT_MODEL):
        from sentence_transformers import SentenceTransformer

        self.model_id = model_id
        self._model = SentenceTransformer(model_id, device="cpu")
        self._model.eval()
        self.dimension = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        vectors = self._model.encode(texts, convert_to_numpy=True, show_progress_bar=False,
                                     batch_size=32)
        return np.asarray(vectors, dtype=np.float64)


def build_encoder(model_id: str):
    """Pick a backend from the model id; ``hash``/``hash:<dim>`` stays offline."""
    if model_id == "hash":
        return HashedUnigramEncoder()
    if model_id.startswith("hash:"):
        return HashedUnigramEncoder(int(model_id.split(":", 1)[1]))
    return SentenceTransformerEncoder(model_id)
