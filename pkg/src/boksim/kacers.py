"""Keyword-aware extractive summarizer.

Every keyword-sentence pair is scored by a pluggable scorer; the top t
sentences per keyword are selected and concatenated (keyword-major, score
descending, duplicates removed keeping the first occurrence).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from . import textprep
from .corpus import Topic
from .embed import VectorTable, embed_avg
from .provider import Provider
from .simrank import cosine


class Scorer(Protocol):
    """Relevance scorer: higher score means the sentence is more related
    to the keyword. Must be deterministic for a fixed underlying model."""

    scorer_id: str

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]: ...


class ScorerError(RuntimeError):
    """A scorer failed; carries the keyword/sentence context."""


class LexicalScorer:
    """Token-overlap ratio |keyword tokens ∩ sentence tokens| / |keyword tokens|.

    Dependency-free; the default when no vectors file is configured.
    """

    scorer_id = "lexical"

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        scores = []
        for keyword, sentence in pairs:
            kw_tokens = set(textprep.tokenize(keyword, frozenset()))
            if not kw_tokens:
                scores.append(0.0)
                continue
            sent_tokens = set(textprep.tokenize(sentence, frozenset()))
            scores.append(len(kw_tokens & sent_tokens) / len(kw_tokens))
        return scores


class EmbeddingScorer:
    """Cosine of mean word vectors of keyword vs. sentence (bi-encoder
    stand-in over a pretrained vector table)."""

    scorer_id = "embedding"

    def __init__(self, table: VectorTable):
        self.table = table

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        scores = []
        for keyword, sentence in pairs:
            kv = embed_avg(self.table, textprep.tokenize(keyword, frozenset()))
            sv = embed_avg(self.table, textprep.tokenize(sentence, frozenset()))
            scores.append(cosine(kv, sv))
        return scores


class ExternalScorer:
    """True cross-encoder scoring over the provider wire protocol."""

    scorer_id = "external"

    def __init__(self, provider: Provider):
        self.provider = provider

    def score_batch(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return self.provider.score(list(pairs))


def score_pairs(
    scorer: Scorer,
    keywords: Sequence[str],
    sentences: Sequence[str],
) -> np.ndarray:
    """Score matrix with entry (i, j) = score of (keyword_i, sentence_j)."""
    if not keywords:
        raise ValueError("keywords must be non-empty")
    if not sentences:
        raise ValueError("sentences must be non-empty")
    pairs = [(kw, sent) for kw in keywords for sent in sentences]
    try:
        flat = scorer.score_batch(pairs)
    except Exception as exc:
        raise ScorerError(
            f"scorer {getattr(scorer, 'scorer_id', scorer)!r} failed on "
            f"{len(keywords)} keyword(s) x {len(sentences)} sentence(s): {exc}"
        ) from exc
    matrix = np.asarray(flat, dtype=np.float64).reshape(len(keywords), len(sentences))
    if not np.all(np.isfinite(matrix)):
        bad = np.argwhere(~np.isfinite(matrix))[0]
        raise ScorerError(
            f"scorer returned a non-finite score for keyword {bad[0]}, sentence {bad[1]}"
        )
    return matrix


@dataclass(frozen=True)
class Summary:
    per_keyword: tuple[tuple[int, ...], ...]  # selected sentence indices per keyword
    text: str
    t: int


def summarize(text: str, keywords: Sequence[str], t: int, scorer: Scorer) -> Summary:
    """Select the top-t sentences per keyword and concatenate.

    Ties break toward the lower sentence index. The summary text is the
    keyword-major, score-descending concatenation with duplicate sentences
    removed keeping the first occurrence, joined by single spaces.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if not keywords:
        raise ValueError("keywords must be non-empty")
    sentences = textprep.split_sentences(text)
    if not sentences:
        raise ValueError("text yields no sentences")
    matrix = score_pairs(scorer, keywords, sentences)
    per_keyword = []
    for row in matrix:
        order = sorted(range(len(sentences)), key=lambda j: (-row[j], j))
        per_keyword.append(tuple(order[: min(t, len(sentences))]))
    seen: set[int] = set()
    chosen: list[str] = []
    for selected in per_keyword:
        for idx in selected:
            if idx not in seen:
                seen.add(idx)
                chosen.append(sentences[idx])
    return Summary(per_keyword=tuple(per_keyword), text=" ".join(chosen), t=t)


def build_semantic_summary(
    topic: Topic,
    n_main: int | None,
    n_abs: int | None,
    scorer: Scorer,
) -> str:
    """Summarized-or-original main segment, a space, then
    summarized-or-original abstract. n=None passes the segment through
    verbatim; empty segments stay empty rather than erroring, mirroring
    how absent corpus segments are represented.
    """
    if (n_main is not None or n_abs is not None) and not topic.keywords:
        raise ValueError(f"topic {topic.id!r} has no keywords to guide summarization")
    parts = []
    for segment, n in ((topic.main, n_main), (topic.abstract, n_abs)):
        if n is None or not segment.strip():
            rendered = segment
        else:
            rendered = summarize(segment, topic.keywords, n, scorer).text
        if rendered:
            parts.append(rendered)
    return " ".join(parts)


def summary_cache_entry(topic: Topic, n_main: int | None, n_abs: int | None, scorer: Scorer) -> dict:
    """One summary-cache record as written by the CLI summarize stage."""
    return {
        "text": build_semantic_summary(topic, n_main, n_abs, scorer),
        "n_main": n_main,
        "n_abs": n_abs,
        "scorer_id": scorer.scorer_id,
    }
