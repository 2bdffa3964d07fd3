"""Corpus data model and snapshot loading.

A corpus is a UTF-8 JSON file: a top-level object with a "topics" array.
Each topic carries the segments of a body-of-knowledge entry plus the
human-labeled related-topic list used as ground truth downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Mapping

SEGMENT_NAMES = ("title", "keyword", "abstract", "main", "learnobj", "iaq", "semantic_summary")

_STRING_KEYS = ("id", "title", "abstract", "main")
_LIST_KEYS = ("keywords", "learning_objectives", "assessment_questions", "related")
_ALLOWED_KEYS = frozenset(_STRING_KEYS + _LIST_KEYS)


class CorpusError(ValueError):
    """Raised for unreadable, malformed or inconsistent corpus files."""


@dataclass(frozen=True)
class Topic:
    id: str
    title: str = ""
    keywords: tuple[str, ...] = ()
    abstract: str = ""
    main: str = ""
    learning_objectives: tuple[str, ...] = ()
    assessment_questions: tuple[str, ...] = ()
    related: tuple[str, ...] = ()

    @property
    def knowledge_area(self) -> str:
        """KA code: the id prefix before the first hyphen."""
        return self.id.split("-", 1)[0]


@dataclass(frozen=True)
class LoadReport:
    """Lenient-mode bookkeeping: what was dropped or ignored during load."""

    dropped_related: int = 0
    ignored_keys: int = 0

    @property
    def warnings(self) -> int:
        return self.dropped_related + self.ignored_keys


@dataclass(frozen=True)
class Corpus:
    topics: tuple[Topic, ...]
    load_report: LoadReport = field(default=LoadReport(), compare=False)

    def __post_init__(self):
        ids = [t.id for t in self.topics]
        if len(set(ids)) != len(ids):
            raise CorpusError("duplicate topic ids")
        if ids != sorted(ids):
            object.__setattr__(self, "topics", tuple(sorted(self.topics, key=lambda t: t.id)))

    @property
    def ka_codes(self) -> frozenset[str]:
        return frozenset(t.knowledge_area for t in self.topics)

    def __len__(self) -> int:
        return len(self.topics)

    def __iter__(self):
        return iter(self.topics)

    def ids(self) -> list[str]:
        return [t.id for t in self.topics]

    def get(self, topic_id: str) -> Topic:
        topic = self.by_id().get(topic_id)
        if topic is None:
            raise KeyError(f"unknown topic id: {topic_id!r}")
        return topic

    def by_id(self) -> dict[str, Topic]:
        return {t.id: t for t in self.topics}


def load_corpus(path: str, mode: str = "strict") -> Corpus:
    """Load and validate a corpus snapshot.

    strict: unknown keys, dangling related ids and self-references are errors.
    lenient: unknown keys are ignored and unresolvable related ids dropped,
    both tallied in the returned corpus's load_report.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise CorpusError(f"cannot read corpus file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CorpusError(f"corpus file {path!r} is not valid JSON: {exc}") from exc
    return parse_corpus(raw, mode=mode)


def parse_corpus(raw: object, mode: str = "strict") -> Corpus:
    strict = mode == "strict"
    if not isinstance(raw, dict) or "topics" not in raw:
        raise CorpusError("corpus must be an object with a 'topics' array")
    entries = raw["topics"]
    if not isinstance(entries, list):
        raise CorpusError("'topics' must be an array")
    if strict:
        extra = set(raw) - {"topics"}
        if extra:
            raise CorpusError(f"unknown top-level keys: {sorted(extra)}")

    ignored_keys = 0
    topics: list[Topic] = []
    seen: set[str] = set()
    for pos, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise CorpusError(f"topic #{pos} is not an object")
        unknown = set(entry) - _ALLOWED_KEYS
        if unknown:
            if strict:
                raise CorpusError(f"topic #{pos}: unknown keys {sorted(unknown)}")
            ignored_keys += len(unknown)
        topic = _parse_topic(entry, pos)
        if topic.id in seen:
            raise CorpusError(f"duplicate topic id {topic.id!r}")
        seen.add(topic.id)
        topics.append(topic)

    dropped = 0
    cleaned: list[Topic] = []
    for topic in topics:
        related = []
        for rel in topic.related:
            if rel == topic.id:
                if strict:
                    raise CorpusError(f"topic {topic.id!r} lists itself as related")
                dropped += 1
            elif rel not in seen:
                if strict:
                    raise CorpusError(f"topic {topic.id!r} has dangling related id {rel!r}")
                dropped += 1
            else:
                related.append(rel)
        cleaned.append(
            topic if tuple(related) == topic.related
            else replace(topic, related=tuple(related))
        )
    report = LoadReport(dropped_related=dropped, ignored_keys=ignored_keys)
    return Corpus(topics=tuple(sorted(cleaned, key=lambda t: t.id)), load_report=report)


def _parse_topic(entry: Mapping[str, object], pos: int) -> Topic:
    ident = entry.get("id")
    if not isinstance(ident, str) or not ident:
        raise CorpusError(f"topic #{pos}: missing or empty 'id'")
    values: dict[str, object] = {"id": ident}
    for key in _STRING_KEYS[1:]:
        value = entry.get(key, "")
        if not isinstance(value, str):
            raise CorpusError(f"topic {ident!r}: {key!r} must be a string")
        values[key] = value
    for key in _LIST_KEYS:
        value = entry.get(key, [])
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise CorpusError(f"topic {ident!r}: {key!r} must be an array of strings")
        values[key] = tuple(value)
    return Topic(**values)  # type: ignore[arg-type]


def corpus_to_json(corpus: Corpus) -> dict:
    """Serializable form; load_corpus(save) round-trips to an equal Corpus."""
    return {
        "topics": [
            {
                "id": t.id,
                "title": t.title,
                "keywords": list(t.keywords),
                "abstract": t.abstract,
                "main": t.main,
                "learning_objectives": list(t.learning_objectives),
                "assessment_questions": list(t.assessment_questions),
                "related": list(t.related),
            }
            for t in corpus.topics
        ]
    }


def save_corpus(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(corpus_to_json(corpus), handle, indent=2, sort_keys=True)
        handle.write("\n")


@dataclass(frozen=True)
class SegmentSelector:
    """Ordered choice of topic segments to concatenate for analysis."""

    parts: tuple[str, ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("selector needs at least one part")
        if len(set(self.parts)) != len(self.parts):
            raise ValueError("selector parts must not repeat")
        unknown = [p for p in self.parts if p not in SEGMENT_NAMES]
        if unknown:
            raise ValueError(f"unknown segment name(s): {unknown}; valid: {SEGMENT_NAMES}")

    @classmethod
    def parse(cls, spec: str) -> "SegmentSelector":
        return cls(tuple(p.strip() for p in spec.split(",") if p.strip()))


def select_text(
    topic: Topic,
    selector: SegmentSelector,
    summaries: Mapping[str, str] | None = None,
) -> str:
    """Concatenate the selected segments in selector order, single-space
    separated. Keywords join with ". "; list segments join with " "."""
    pieces = []
    for part in selector.parts:
        if part == "title":
            text = topic.title
        elif part == "keyword":
            text = ". ".join(topic.keywords)
        elif part == "abstract":
            text = topic.abstract
        elif part == "main":
            text = topic.main
        elif part == "learnobj":
            text = " ".join(topic.learning_objectives)
        elif part == "iaq":
            text = " ".join(topic.assessment_questions)
        else:  # semantic_summary
            if summaries is None or topic.id not in summaries:
                raise KeyError(f"no semantic summary available for topic {topic.id!r}")
            text = summaries[topic.id]
        if text:
            pieces.append(text)
    return " ".join(pieces)


@dataclass(frozen=True)
class CorpusStats:
    topic_count: int
    ka_counts: dict[str, int]
    related_mean: float
    related_min: int
    related_max: int
    empty_related_count: int


def corpus_stats(corpus: Corpus) -> CorpusStats:
    counts: dict[str, int] = {}
    for topic in corpus.topics:
        counts[topic.knowledge_area] = counts.get(topic.knowledge_area, 0) + 1
    sizes = [len(t.related) for t in corpus.topics]
    return CorpusStats(
        topic_count=len(corpus.topics),
        ka_counts=dict(sorted(counts.items())),
        related_mean=sum(sizes) / len(sizes) if sizes else 0.0,
        related_min=min(sizes) if sizes else 0,
        related_max=max(sizes) if sizes else 0,
        empty_related_count=sum(1 for s in sizes if s == 0),
    )
