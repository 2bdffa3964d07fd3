"""Protocol server: newline-delimited JSON over a TCP socket or stdio.

Requests:  {"id": int, "op": "info"}
           {"id": int, "op": "embed", "texts": [...]}
           {"id": int, "op": "score", "pairs": [[keyword, sentence], ...]}
Responses: {"id": int, "ok": true, "result": ...}
           {"id": int, "ok": false, "error": "..."}

One JSON document per line, UTF-8. Every parseable request gets exactly
one response carrying its id; unparseable lines are answered with id -1.
Each connection is handled sequentially (one request in flight); the TCP
server accepts any number of concurrent connections.
"""

from __future__ import annotations

import argparse
import json
import socketserver
import sys

from .mock import MockBackend


def handle_line(line: str, backend) -> dict:
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        return {"id": -1, "ok": False, "error": f"invalid JSON: {exc}"}
    if not isinstance(request, dict) or not isinstance(request.get("id"), int):
        return {"id": -1, "ok": False, "error": "request must be an object with an integer id"}
    rid = request["id"]
    op = request.get("op")
    try:
        if op == "info":
            return {"id": rid, "ok": True, "result": backend.info()}
        if op == "embed":
            texts = request.get("texts")
            if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
                return {"id": rid, "ok": False, "error": "'texts' must be a list of strings"}
            return {"id": rid, "ok": True, "result": backend.embed(texts)}
        if op == "score":
            pairs = request.get("pairs")
            if not isinstance(pairs, list) or not all(
                isinstance(p, list)
                and len(p) == 2
                and all(isinstance(x, str) for x in p)
                for p in pairs
            ):
                return {
                    "id": rid,
                    "ok": False,
                    "error": "'pairs' must be a list of [keyword, sentence] pairs",
                }
            return {"id": rid, "ok": True, "result": backend.score(pairs)}
        return {"id": rid, "ok": False, "error": f"unknown op {op!r}"}
    except Exception as exc:  # backend failure must not kill the connection
        return {"id": rid, "ok": False, "error": f"{type(exc).__name__}: {exc}"}


def encode_response(response: dict) -> str:
    return json.dumps(response, ensure_ascii=False) + "\n"


def serve_stdio(backend) -> None:
    for line in sys.stdin:
        if not line.strip():
            continue
        sys.stdout.write(encode_response(handle_line(line, backend)))
        sys.stdout.flush()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8")
            if not line.strip():
                continue
            response = handle_line(line, self.server.backend)  # type: ignore[attr-defined]
            self.wfile.write(encode_response(response).encode("utf-8"))
            self.wfile.flush()


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, backend):
        super().__init__(address, _Handler)
        self.backend = backend


def serve_tcp(backend, host: str, port: int) -> None:
    with _Server((host, port), backend) as server:
        bound_host, bound_port = server.server_address[:2]
        print(f"listening on {bound_host}:{bound_port}", file=sys.stderr, flush=True)
        server.serve_forever()


def build_backend(args) -> object:
    if args.mock:
        return MockBackend()
    from .models import TransformerBackend

    return TransformerBackend(args.model, args.cross_encoder)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="encoder-sidecar",
        description="Serve embedding and keyword-sentence scoring models over "
        "newline-delimited JSON (TCP or stdio).",
    )
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument(
        "--mock",
        action="store_true",
        help="Deterministic hashed-token backend; no model download needed.",
    )
    mode.add_argument("--model", help="Bi-encoder model name for the embed op.")
    parser.add_argument(
        "--cross-encoder",
        dest="cross_encoder",
        help="Cross-encoder model name for the score op (bi-encoder cosine fallback otherwise).",
    )
    parser.add_argument("--host", default="127.0.0.1", help="TCP bind host.")
    parser.add_argument(
        "--port",
        type=int,
        help="TCP port to listen on (0 picks a free port); omit for stdio mode.",
    )
    args = parser.parse_args(argv)
    if not args.mock and not args.model:
        parser.error("pass --mock or --model <name>")
    try:
        backend = build_backend(args)
    except Exception as exc:
        print(f"model load failed: {exc}", file=sys.stderr)
        return 1
    if args.port is None:
        serve_stdio(backend)
    else:
        serve_tcp(backend, args.host, args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
