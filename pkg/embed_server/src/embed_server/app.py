"""HTTP service exposing the sentence-embedding protocol.

POST /embed  {"texts": [str, ...]}
    -> {"embeddings": [[number, ...], ...], "dimension": int, "model": str}
GET /health  -> {"status": "ok", "model": str}  (503 until the model loads)

The server is the single normalization point: every returned vector is
L2-normalized here, so any backend is interchangeable. Responses are
order-preserving and deterministic: the same text always maps to the same
vector within one server instance. The model loads in a background thread
at startup; both routes answer 503 until it is ready, and stay 503 if
loading failed.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager
from typing import Callable

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .encoders import DEFAULT_MODEL, build_encoder

MAX_BATCH_DEFAULT = 256


class EmbedRequest(BaseModel):
    texts: list[str]


class EmbedResponse(BaseModel):
    embeddings: list[list[float]]
    dimension: int
    model: str


def create_app(model_id: str = DEFAULT_MODEL, max_batch: int = MAX_BATCH_DEFAULT,
               encoder_factory: Callable | None = None) -> FastAPI:
    """Build the service; ``encoder_factory`` overrides model loading (tests)."""
    factory = encoder_factory or (lambda: build_encoder(model_id))

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        def load():
            try:
                app.state.encoder = factory()
            except Exception as exc:  # surfaced through /health as 503
                app.state.load_error = f"{type(exc).__name__}: {exc}"

        threading.Thread(target=load, daemon=True).start()
        yield

    app = FastAPI(title="embed-server", docs_url=None, redoc_url=None, lifespan=lifespan)
    app.state.encoder = None
    app.state.load_error = None

    def _ready_encoder():
        if app.state.load_error is not None:
            raise HTTPException(status_code=503, detail=f"model failed to load: {app.state.load_error}")
        if app.state.encoder is None:
            raise HTTPException(status_code=503, detail="model is still loading")
        return app.state.encoder

    @app.get("/health")
    def health():
        encoder = _ready_encoder()
        return {"status": "ok", "model": encoder.model_id}

    @app.post("/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest):
        encoder = _ready_encoder()
        if not request.texts:
            raise HTTPException(status_code=400, detail="texts must be a non-empty list")
        if len(request.texts) > max_batch:
            raise HTTPException(status_code=413,
                                detail=f"batch of {len(request.texts)} exceeds limit {max_batch}")
        matrix = np.asarray(encoder.encode(list(request.texts)), dtype=np.float64)
        norms = np.linalg.norm(matrix, axis=1)
        if np.any(norms == 0):
            raise HTTPException(status_code=500, detail="backend produced a zero vector")
        matrix = matrix / norms[:, np.newaxis]
        return EmbedResponse(embeddings=matrix.tolist(), dimension=int(matrix.shape[1]),
                             model=encoder.model_id)

    return app
