"""Deterministic mock backend: no model downloads, bit-reproducible output.

Documented rules (tests elsewhere re-derive these independently):

* Tokens are the lowercase ``\\w+`` runs of the input; every input is
  truncated to the first ``max_tokens`` (512) tokens before use.
* ``embed`` returns an 8-dim hashed bag-of-tokens vector: each token adds
  1.0 to bucket ``int.from_bytes(sha1(token)[:4], "big") % 8``; the count
  vector is then L2-normalized (an all-empty text stays the zero vector).
* ``score`` returns the token-overlap ratio
  ``|set(keyword) & set(sentence)| / |set(keyword)|`` (0.0 for an empty
  keyword token set).
"""

from __future__ import annotations

import hashlib
import math
import re

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)

MOCK_DIM = 8
MOCK_MAX_TOKENS = 512


def _tokens(text: str, max_tokens: int) -> list[str]:
    return _TOKEN_RE.findall(text.lower())[:max_tokens]


def _bucket(token: str, dim: int) -> int:
    digest = hashlib.sha1(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") % dim


class MockBackend:
    name = "mock"
    dim = MOCK_DIM
    max_tokens = MOCK_MAX_TOKENS

    def info(self) -> dict:
        return {"name": self.name, "dim": self.dim, "max_tokens": self.max_tokens}

    def embed(self, texts: list[str]) -> list[list[float]]:
        vectors = []
        for text in texts:
            counts = [0.0] * self.dim
            for token in _tokens(text, self.max_tokens):
                counts[_bucket(token, self.dim)] += 1.0
            norm = math.sqrt(sum(c * c for c in counts))
            if norm:
                counts = [c / norm for c in counts]
            vectors.append(counts)
        return vectors

    def score(self, pairs: list[list[str]]) -> list[float]:
        scores = []
        for keyword, sentence in pairs:
            kw = set(_tokens(keyword, self.max_tokens))
            if not kw:
                scores.append(0.0)
                continue
            sent = set(_tokens(sentence, self.max_tokens))
            scores.append(len(kw & sent) / len(kw))
        return scores
