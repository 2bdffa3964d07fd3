"""Client side of the embedding/scoring provider wire protocol.

The protocol is newline-delimited JSON over a TCP socket or a child
process's stdio. Requests carry an integer id and an op:

    {"id": 1, "op": "info"}
    {"id": 2, "op": "embed", "texts": ["..."]}
    {"id": 3, "op": "score", "pairs": [["keyword", "sentence"], ...]}

Responses echo the id: {"id": 1, "ok": true, "result": ...} or
{"id": 1, "ok": false, "error": "..."}. One JSON document per line, UTF-8.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
from dataclasses import dataclass
from typing import Protocol, Sequence


class ProviderError(RuntimeError):
    """Provider unreachable, protocol violation or provider-side failure."""


@dataclass(frozen=True)
class ProviderInfo:
    name: str
    dim: int
    max_tokens: int

    def __post_init__(self):
        if self.dim <= 0:
            raise ProviderError(f"provider declared non-positive dim {self.dim}")
        if self.max_tokens <= 0:
            raise ProviderError(f"provider declared non-positive max_tokens {self.max_tokens}")


class Provider(Protocol):
    """Anything answering info/embed/score; satisfied by WireProvider and
    by in-process test doubles."""

    def info(self) -> ProviderInfo: ...

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...

    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]: ...


class WireProvider:
    """Speaks the wire protocol to a provider process.

    Endpoints: "host:port" (TCP) or "stdio:<command line>" (spawn a child
    and talk over its stdin/stdout). One request in flight per connection.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self._next_id = 0
        self._proc: subprocess.Popen | None = None
        self._sock_file = None
        self._sock = None
        if endpoint.startswith("stdio:"):
            command = shlex.split(endpoint[len("stdio:"):])
            if not command:
                raise ProviderError("stdio endpoint needs a command")
            self._proc = subprocess.Popen(
                command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        else:
            host, _, port = endpoint.rpartition(":")
            if not host or not port.isdigit():
                raise ProviderError(f"bad endpoint {endpoint!r}; use host:port or stdio:<cmd>")
            try:
                self._sock = socket.create_connection((host, int(port)), timeout=timeout)
            except OSError as exc:
                raise ProviderError(f"cannot connect to provider at {endpoint}: {exc}") from exc
            self._sock_file = self._sock.makefile("rw", encoding="utf-8", newline="\n")

    def close(self) -> None:
        if self._sock_file is not None:
            self._sock_file.close()
            self._sock.close()
            self._sock_file = None
            self._sock = None
        if self._proc is not None:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=10)
            self._proc = None

    def __enter__(self) -> "WireProvider":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _roundtrip(self, request: dict) -> object:
        self._next_id += 1
        request = {"id": self._next_id, **request}
        line = json.dumps(request, ensure_ascii=False)
        try:
            if self._proc is not None:
                self._proc.stdin.write(line + "\n")
                self._proc.stdin.flush()
                reply = self._proc.stdout.readline()
            else:
                self._sock_file.write(line + "\n")
                self._sock_file.flush()
                reply = self._sock_file.readline()
        except (OSError, BrokenPipeError) as exc:
            raise ProviderError(f"provider connection failed: {exc}") from exc
        if not reply:
            raise ProviderError("provider closed the connection")
        try:
            payload = json.loads(reply)
        except json.JSONDecodeError as exc:
            raise ProviderError(f"provider sent invalid JSON: {exc}") from exc
        if not isinstance(payload, dict) or payload.get("id") != self._next_id:
            raise ProviderError(f"provider response id mismatch: {payload!r}")
        if payload.get("ok") is not True:
            raise ProviderError(f"provider error: {payload.get('error', 'unknown')}")
        return payload.get("result")

    def info(self) -> ProviderInfo:
        result = self._roundtrip({"op": "info"})
        if not isinstance(result, dict):
            raise ProviderError(f"bad info result: {result!r}")
        try:
            return ProviderInfo(
                name=str(result["name"]),
                dim=int(result["dim"]),
                max_tokens=int(result["max_tokens"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderError(f"bad info result: {result!r}") from exc

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        result = self._roundtrip({"op": "embed", "texts": list(texts)})
        if not isinstance(result, list):
            raise ProviderError(f"bad embed result: {type(result).__name__}")
        return [[float(x) for x in vec] for vec in result]

    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        result = self._roundtrip({"op": "score", "pairs": [list(p) for p in pairs]})
        if not isinstance(result, list):
            raise ProviderError(f"bad score result: {type(result).__name__}")
        return [float(x) for x in result]


def resolve_endpoint(flag_value: str | None, env: dict | None = None) -> str | None:
    """BOKSIM_PROVIDER wins over the --provider flag when both are set."""
    import os

    env = env if env is not None else dict(os.environ)
    return env.get("BOKSIM_PROVIDER") or flag_value
