"""Wire-protocol conformance for the sidecar process in --mock mode."""

from __future__ import annotations

import json
import subprocess
import sys


def test_info_roundtrip(sidecar):
    reply = sidecar.request({"id": 1, "op": "info"})
    assert reply == {
        "id": 1,
        "ok": True,
        "result": {"name": "mock", "dim": 8, "max_tokens": 512},
    }
    assert sidecar.request({"id": 2, "op": "info"})["result"] == reply["result"]


def test_embed_roundtrip(sidecar):
    reply = sidecar.request({"id": 3, "op": "embed", "texts": []})
    assert reply == {"id": 3, "ok": True, "result": []}
    reply = sidecar.request({"id": 4, "op": "embed", "texts": ["gis maps", "gis maps", "x"]})
    assert reply["ok"] is True
    vectors = reply["result"]
    assert len(vectors) == 3
    assert all(len(v) == 8 for v in vectors)
    assert vectors[0] == vectors[1]  # identical text, identical vector
    assert all(all(isinstance(x, float) for x in v) for v in vectors)


def test_score_roundtrip(sidecar):
    reply = sidecar.request({"id": 5, "op": "score", "pairs": []})
    assert reply == {"id": 5, "ok": True, "result": []}
    pairs = [["gis", "gis"], ["gis", "unrelated words"], ["a b", "b only"]]
    reply = sidecar.request({"id": 6, "op": "score", "pairs": pairs})
    scores = reply["result"]
    assert len(scores) == 3
    assert scores[0] >= scores[1]
    assert all(isinstance(s, float) for s in scores)


def test_every_request_gets_one_matching_response(sidecar):
    for rid in (10, 11, 12, 99):
        reply = sidecar.request({"id": rid, "op": "info"})
        assert reply["id"] == rid


def test_malformed_json_gets_error(sidecar):
    reply = sidecar.send_raw("{not json")
    assert reply["ok"] is False and reply["id"] == -1
    # connection stays usable afterwards
    assert sidecar.request({"id": 7, "op": "info"})["ok"] is True


def test_missing_id_gets_error(sidecar):
    reply = sidecar.request({"op": "info"})
    assert reply == {"id": -1, "ok": False,
                     "error": "request must be an object with an integer id"}


def test_unknown_op_and_bad_arguments(sidecar):
    reply = sidecar.request({"id": 8, "op": "translate"})
    assert reply["ok"] is False and reply["id"] == 8
    reply = sidecar.request({"id": 9, "op": "embed", "texts": "not-a-list"})
    assert reply["ok"] is False and reply["id"] == 9
    reply = sidecar.request({"id": 10, "op": "score", "pairs": [["only-one"]]})
    assert reply["ok"] is False and reply["id"] == 10


def test_scores_and_vectors_finite(sidecar):
    texts = ["", "x" * 5000, "mixed 123 $%^ tokens"]
    vectors = sidecar.request({"id": 20, "op": "embed", "texts": texts})["result"]
    for vec in vectors:
        assert all(x == x and abs(x) != float("inf") for x in vec)
    pairs = [["", ""], ["kw", ""], ["", "sentence"]]
    scores = sidecar.request({"id": 21, "op": "score", "pairs": pairs})["result"]
    assert all(s == s and abs(s) != float("inf") for s in scores)


def test_stdio_mode_roundtrip():
    proc = subprocess.Popen(
        [sys.executable, "-m", "encoder_sidecar.server", "--mock"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
    )
    try:
        requests = [
            {"id": 1, "op": "info"},
            {"id": 2, "op": "embed", "texts": ["hello world"]},
            {"id": 3, "op": "score", "pairs": [["hello", "hello there"]]},
        ]
        for request in requests:
            proc.stdin.write(json.dumps(request) + "\n")
        proc.stdin.flush()
        replies = [json.loads(proc.stdout.readline()) for _ in requests]
        assert [r["id"] for r in replies] == [1, 2, 3]
        assert all(r["ok"] for r in replies)
        assert replies[0]["result"]["dim"] == 8
        assert replies[2]["result"] == [1.0]
    finally:
        proc.stdin.close()
        proc.wait(timeout=10)


def test_requires_mock_or_model():
    proc = subprocess.run(
        [sys.executable, "-m", "encoder_sidecar.server"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode != 0


def test_bad_model_exits_nonzero():
    proc = subprocess.run(
        [sys.executable, "-m", "encoder_sidecar.server", "--model", "no/such-model-anywhere"],
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 1
    assert "model load failed" in proc.stderr
