"""Sentence-embedding HTTP service speaking the /embed protocol."""

from .app import create_app
from .encoders import DEFAULT_MODEL, HashedUnigramEncoder, SentenceTransformerEncoder, build_encoder

__all__ = ["DEFAULT_MODEL", "HashedUnigramEncoder", "SentenceTransformerEncoder",
           "build_encoder", "create_app"]
