from __future__ import annotations

import json
import re
import socket
import subprocess
import sys

import pytest


class SidecarProcess:
    """Spawns the sidecar and speaks the line protocol to it over TCP."""

    def __init__(self):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "encoder_sidecar.server", "--mock", "--port", "0"],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        banner = self.proc.stderr.readline()
        match = re.search(r"listening on (\S+):(\d+)", banner)
        assert match, f"no listen banner, got {banner!r}"
        self.host, self.port = match.group(1), int(match.group(2))
        self._sock = socket.create_connection((self.host, self.port), timeout=10)
        self._file = self._sock.makefile("rw", encoding="utf-8", newline="\n")

    @property
    def endpoint(self) -> str:
        return f"{self.host}:{self.port}"

    def send_raw(self, line: str) -> dict:
        self._file.write(line + "\n")
        self._file.flush()
        return json.loads(self._file.readline())

    def request(self, payload: dict) -> dict:
        return self.send_raw(json.dumps(payload))

    def close(self):
        self._file.close()
        self._sock.close()
        self.proc.terminate()
        self.proc.wait(timeout=10)


@pytest.fixture
def sidecar():
    proc = SidecarProcess()
    yield proc
    proc.close()
