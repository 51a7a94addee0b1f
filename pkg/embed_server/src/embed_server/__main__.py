"""Command-line launcher: ``embed-server`` or ``python3 -m embed_server``.

Flags fall back to EMBED_SERVER_HOST / EMBED_SERVER_PORT / EMBED_SERVER_MODEL
environment variables, then to defaults. Use ``--model hash:512`` for the
offline hashed-unigram backend; any other id is loaded via
sentence-transformers.
"""

from __future__ import annotations

import argparse
import os

import uvicorn

from .app import MAX_BATCH_DEFAULT, create_app
from .encoders import DEFAULT_MODEL


def main() -> None:
    parser = argparse.ArgumentParser(prog="embed-server", description=__doc__.splitlines()[0])
    parser.add_argument("--host", default=os.environ.get("EMBED_SERVER_HOST", "127.0.0.1"))
    parser.add_argument("--port", type=int, default=int(os.environ.get("EMBED_SERVER_PORT", "8901")))
    parser.add_argument("--model", default=os.environ.get("EMBED_SERVER_MODEL", DEFAULT_MODEL),
                        help=f"model id (default {DEFAULT_MODEL}; 'hash:<dim>' for offline)")
    parser.add_argument("--max-batch", type=int, default=MAX_BATCH_DEFAULT,
                        help=f"largest accepted texts batch (default {MAX_BATCH_DEFAULT})")
    args = parser.parse_args()
    app = create_app(model_id=args.model, max_batch=args.max_batch)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")


if __name__ == "__main__":
    main()
