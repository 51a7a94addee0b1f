"""Shared pytest fixtures: a stub embedding HTTP service and tiny datasets."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from helpers import dataset_obj, write_jsonl


class StubEmbedHandler(BaseHTTPRequestHandler):
    """Deterministic /embed stub: 8-dim hashed one-hot vectors, unit norm."""

    def log_message(self, *args):  # keep test output quiet
        pass

    def do_GET(self):
        if self.path == "/health":
            self._reply(200, {"status": "ok", "model": self.server.model_name})
        else:
            self._reply(404, {"error": "not found"})

    def do_POST(self):
        if self.path != "/embed":
            self._reply(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        texts = body.get("texts", [])
        self.server.requests.append(list(texts))
        mode = self.server.mode
        if mode == "http-error":
            self._reply(500, {"error": "boom"})
            return
        dim = self.server.dimension
        vectors = []
        for text in texts:
            vec = np.zeros(dim)
            vec[hash(text) % dim] = 1.0
            if mode == "not-normalized":
                vec = vec * 3.0
            vectors.append(vec.tolist())
        reported_dim = dim + 1 if mode == "bad-dimension" else dim
        if mode == "short-reply" and vectors:
            vectors = vectors[:-1]
        self._reply(200, {"embeddings": vectors, "dimension": reported_dim,
                          "model": self.server.model_name})

    def _reply(self, status, payload):
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class StubEmbedServer:
    def __init__(self):
        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), StubEmbedHandler)
        self.httpd.mode = "ok"
        self.httpd.dimension = 8
        self.httpd.model_name = "stub-embedder"
        self.httpd.requests = []
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    @property
    def requests(self):
        return self.httpd.requests

    def set_mode(self, mode: str):
        self.httpd.mode = mode

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def embed_stub():
    server = StubEmbedServer()
    yield server
    server.close()


@pytest.fixture
def tiny_dataset_path(tmp_path):
    """Two procedures, three steps each, one structured + one templated change."""
    records = [
        dataset_obj("p1", [
            [{"entity": "flour", "attribute": "state", "before": "dry", "after": "mixed"}],
            ["shape of potato was whole before and cut in half afterwards"],
            [{"entity": "oven", "attribute": "temperature", "before": "cold", "after": "hot"}],
        ], goal="Bake bread"),
        dataset_obj("p2", [
            [{"entity": "cup", "attribute": "location", "before": "shelf", "after": "table"}],
            [{"entity": "water", "attribute": "state", "before": "still", "after": "boiling"}],
            [{"entity": "tea", "attribute": "state", "before": "dry", "after": "steeped"}],
        ], goal="Make tea"),
    ]
    return write_jsonl(tmp_path / "dataset.jsonl", records)
