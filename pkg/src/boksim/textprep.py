"""Deterministic text preprocessing: sentence splitting, tokenization and
bigram/trigram phrase detection.

Everything here is rule-based so the outputs are exactly reproducible; no
statistical sentence models, no stemming.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

# Trailing abbreviations that must not end a sentence even when followed by
# whitespace and a capital letter. Matched case-insensitively against the
# text immediately before a candidate "." boundary.
ABBREVIATIONS = (
    "e.g.",
    "i.e.",
    "etc.",
    "cf.",
    "ca.",
    "vs.",
    "et al.",
    "al.",
    "fig.",
    "figs.",
    "eq.",
    "sec.",
    "no.",
    "dr.",
    "mr.",
    "mrs.",
    "ms.",
    "prof.",
    "st.",
)

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)  # runs of letters/digits/underscore
_WORD_BEFORE_RE = re.compile(r"\S+$")


def load_stopwords(path: str | None = None) -> frozenset[str]:
    """Read a stopword file (one token per line, '#' comments allowed).

    With no path, returns the built-in 179-word English list.
    """
    if path is None:
        text = resources.files("boksim.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        words.add(line.lower())
    return frozenset(words)


DEFAULT_STOPWORDS = load_stopwords()


def split_sentences(text: str) -> list[str]:
    """Split text into sentences.

    A boundary is a run of '.', '?' or '!' followed by whitespace and an
    uppercase letter, or end-of-text. Known abbreviations ("e.g.", "Fig.",
    "et al.", ...) suppress '.' boundaries. Empty sentences are dropped.
    """
    if not text or not text.strip():
        return []
    boundaries = []
    i = 0
    n = len(text)
    while i < n:
        if text[i] in ".?!":
            j = i
            while j + 1 < n and text[j + 1] in ".?!":
                j += 1
            if _is_boundary(text, i, j):
                boundaries.append(j + 1)
            i = j + 1
        else:
            i += 1
    sentences = []
    start = 0
    for end in boundaries + [n]:
        piece = text[start:end].strip()
        if piece:
            sentences.append(piece)
        start = end
    return sentences


def _is_boundary(text: str, first: int, last: int) -> bool:
    """Whether the punctuation run text[first..last] ends a sentence."""
    tail = text[last + 1 :]
    if tail.strip():
        # require whitespace then an uppercase letter
        if not tail[0].isspace():
            return False
        nxt = tail.lstrip()
        if not nxt or not nxt[0].isupper():
            return False
    if text[first] == "." and first == last:
        before = _WORD_BEFORE_RE.search(text, 0, last + 1)
        if before:
            word = before.group(0).lower()
            for abbr in ABBREVIATIONS:
                if word == abbr or word.endswith(" " + abbr):
                    return False
            # multiword abbreviations ("et al.") span the preceding token too
            prefix = text[: last + 1].lower()
            for abbr in ABBREVIATIONS:
                if " " in abbr and prefix.endswith(abbr):
                    return False
    return True


def tokenize(text: str, stopwords: frozenset[str] | set[str] = DEFAULT_STOPWORDS) -> list[str]:
    """Lowercase and split on non-word characters; drop tokens shorter than
    2 characters and stopwords."""
    tokens = []
    for token in _TOKEN_RE.findall(text.lower()):
        if len(token) < 2:
            continue
        if token in stopwords:
            continue
        tokens.append(token)
    return tokens


@dataclass(frozen=True)
class PhraseModel:
    """Counts and scoring parameters for one phrase-merging pass.

    A second pass (trigram formation) is chained through ``next_pass``.
    """

    vocab_size: int
    unigram_counts: dict[str, int]
    pair_counts: dict[tuple[str, str], int]
    min_count: int
    threshold: float
    next_pass: "PhraseModel | None" = field(default=None)

    def score(self, first: str, second: str) -> float:
        """Collocation score (pair_count - min_count) * V / (c(a) * c(b)).

        Pairs never seen together, or with an unseen constituent, score -inf.
        """
        pair = self.pair_counts.get((first, second), 0)
        ca = self.unigram_counts.get(first, 0)
        cb = self.unigram_counts.get(second, 0)
        if pair == 0 or ca == 0 or cb == 0:
            return float("-inf")
        return (pair - self.min_count) * self.vocab_size / (ca * cb)

    def qualifies(self, first: str, second: str) -> bool:
        return self.score(first, second) > self.threshold


def fit_phrases(
    streams: Iterable[Sequence[str]],
    min_count: int = 5,
    threshold: float = 10.0,
    passes: int = 2,
) -> PhraseModel:
    """Fit a phrase model over token streams.

    With passes=2 the streams are re-scanned after bigram merging so that
    bigram tokens can combine with neighbours into trigrams.
    """
    if passes not in (1, 2):
        raise ValueError(f"passes must be 1 or 2, got {passes}")
    if min_count < 0:
        raise ValueError("min_count must be >= 0")
    if threshold <= 0:
        raise ValueError("threshold must be > 0")
    streams = [list(s) for s in streams]
    if not streams:
        raise ValueError("cannot fit phrases on an empty stream collection")
    model = _fit_single(streams, min_count, threshold)
    if passes == 2:
        merged = [_merge_once(model, s) for s in streams]
        second = _fit_single(merged, min_count, threshold)
        model = PhraseModel(
            vocab_size=model.vocab_size,
            unigram_counts=model.unigram_counts,
            pair_counts=model.pair_counts,
            min_count=min_count,
            threshold=threshold,
            next_pass=second,
        )
    return model


def _fit_single(streams: list[list[str]], min_count: int, threshold: float) -> PhraseModel:
    unigrams: dict[str, int] = {}
    pairs: dict[tuple[str, str], int] = {}
    for stream in streams:
        for token in stream:
            unigrams[token] = unigrams.get(token, 0) + 1
        for a, b in zip(stream, stream[1:]):
            pairs[(a, b)] = pairs.get((a, b), 0) + 1
    return PhraseModel(
        vocab_size=max(len(unigrams), 1),
        unigram_counts=unigrams,
        pair_counts=pairs,
        min_count=min_count,
        threshold=threshold,
    )


def _merge_once(model: PhraseModel, stream: Sequence[str]) -> list[str]:
    """One greedy left-to-right merge pass; overlapping candidates resolve
    in favour of the leftmost pair."""
    out: list[str] = []
    i = 0
    n = len(stream)
    while i < n:
        if i + 1 < n and model.qualifies(stream[i], stream[i + 1]):
            out.append(stream[i] + "_" + stream[i + 1])
            i += 2
        else:
            out.append(stream[i])
            i += 1
    return out


def apply_phrases(model: PhraseModel, stream: Sequence[str]) -> list[str]:
    """Merge qualifying adjacent pairs; chains the trigram pass when fitted."""
    merged = _merge_once(model, stream)
    if model.next_pass is not None:
        merged = _merge_once(model.next_pass, merged)
    return merged
