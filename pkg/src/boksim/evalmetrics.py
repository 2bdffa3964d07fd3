"""Retrieval metrics over machine rankings vs. human-labeled related topics.

Per query, with "hits" the ranked candidates that appear in the query's
relevant set and the candidate pool being every other topic (N-1):

    recall    = hits / |relevant set|
    precision = hits / |ranking|
    F         = harmonic mean of recall and precision (0 when both are 0)
    balanced accuracy = (true-positive rate + true-negative rate) / 2,
        with TNR = 1 - (|ranking| - hits) / (pool - |relevant set|)

Macro aggregation: arithmetic mean over queries with a non-empty relevant
set; unlabeled queries are skipped and counted.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .corpus import Corpus, SegmentSelector, select_text
from .simrank import Ranking, pairwise, top_k

METRIC_NAMES = ("recall", "precision", "f", "balanced_accuracy")


@dataclass(frozen=True)
class QueryJudgment:
    query_id: str
    relevant: frozenset[str]
    pool_size: int  # every non-query topic is a candidate

    def __post_init__(self):
        if self.query_id in self.relevant:
            raise ValueError(f"query {self.query_id!r} must not be in its own relevant set")
        if len(self.relevant) > self.pool_size:
            raise ValueError("relevant set larger than the candidate pool")


def _hits(ranking: Ranking, judgment: QueryJudgment) -> int:
    return sum(1 for cid in ranking.ids() if cid in judgment.relevant)


def recall_at_k(ranking: Ranking, judgment: QueryJudgment) -> float:
    """Fraction of the relevant set found in the ranking."""
    if not judgment.relevant:
        raise ValueError(f"query {judgment.query_id!r} has an empty relevant set")
    return _hits(ranking, judgment) / len(judgment.relevant)


def precision_at_k(ranking: Ranking, judgment: QueryJudgment) -> float:
    """Fraction of the ranking that is relevant."""
    if not ranking.entries:
        raise ValueError(f"query {judgment.query_id!r} has an empty ranking")
    return _hits(ranking, judgment) / len(ranking.entries)


def f_at_k(ranking: Ranking, judgment: QueryJudgment) -> float:
    """Harmonic mean of recall and precision; 0 when there are no hits."""
    r = recall_at_k(ranking, judgment)
    p = precision_at_k(ranking, judgment)
    if r + p == 0.0:
        return 0.0
    return 2.0 * r * p / (r + p)


def balanced_accuracy_at_k(ranking: Ranking, judgment: QueryJudgment) -> float:
    """Mean of the true-positive and true-negative rates."""
    if judgment.pool_size <= len(judgment.relevant):
        raise ValueError("pool size must exceed the relevant-set size")
    hits = _hits(ranking, judgment)
    tpr = hits / len(judgment.relevant)
    tnr = 1.0 - (len(ranking.entries) - hits) / (judgment.pool_size - len(judgment.relevant))
    return (tpr + tnr) / 2.0


def all_metrics(ranking: Ranking, judgment: QueryJudgment) -> dict[str, float]:
    return {
        "recall": recall_at_k(ranking, judgment),
        "precision": precision_at_k(ranking, judgment),
        "f": f_at_k(ranking, judgment),
        "balanced_accuracy": balanced_accuracy_at_k(ranking, judgment),
    }


@dataclass(frozen=True)
class MetricsReport:
    per_query: dict[str, dict[int, dict[str, float]]]
    macro: dict[int, dict[str, float]]
    included_query_count: int
    skipped_query_count: int
    metadata: dict[str, str] = field(default_factory=dict)


def judgments_from_corpus(corpus: Corpus) -> dict[str, QueryJudgment]:
    pool = len(corpus) - 1
    return {
        t.id: QueryJudgment(query_id=t.id, relevant=frozenset(t.related), pool_size=pool)
        for t in corpus.topics
    }


def evaluate(
    rankings: Mapping[str, Ranking],
    corpus: Corpus,
    ks: Sequence[int],
    metadata: Mapping[str, str] | None = None,
) -> MetricsReport:
    """Per-query metrics at every k, macro means over labeled queries."""
    if not ks or any(k < 1 for k in ks):
        raise ValueError("ks must be non-empty, all >= 1")
    ks = sorted(set(ks))
    judgments = judgments_from_corpus(corpus)
    for qid in rankings:
        if qid not in judgments:
            raise KeyError(f"ranking for unknown topic {qid!r}")

    per_query: dict[str, dict[int, dict[str, float]]] = {}
    skipped = 0
    for qid in sorted(rankings):
        judgment = judgments[qid]
        if not judgment.relevant:
            skipped += 1
            continue
        ranking = rankings[qid]
        per_query[qid] = {
            k: all_metrics(ranking.truncated(k), judgment) for k in ks
        }

    macro: dict[int, dict[str, float]] = {}
    included = len(per_query)
    for k in ks:
        macro[k] = {
            name: (
                sum(per_query[qid][k][name] for qid in per_query) / included
                if included
                else 0.0
            )
            for name in METRIC_NAMES
        }
    meta = {"aggregation": "macro", **(dict(metadata) if metadata else {})}
    return MetricsReport(
        per_query=per_query,
        macro=macro,
        included_query_count=included,
        skipped_query_count=skipped,
        metadata=meta,
    )


def report_to_csv(report: MetricsReport) -> str:
    """Rows are queries plus a MACRO line; columns are metric@k."""
    ks = sorted(report.macro)
    header = ["query"] + [f"{name}@{k}" for k in ks for name in METRIC_NAMES]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for qid in sorted(report.per_query):
        row = [qid] + [
            repr(report.per_query[qid][k][name]) for k in ks for name in METRIC_NAMES
        ]
        writer.writerow(row)
    writer.writerow(
        ["MACRO"] + [repr(report.macro[k][name]) for k in ks for name in METRIC_NAMES]
    )
    return buf.getvalue()


def report_to_json(report: MetricsReport) -> str:
    payload = {
        "per_query": {
            qid: {str(k): metrics for k, metrics in by_k.items()}
            for qid, by_k in report.per_query.items()
        },
        "macro": {str(k): metrics for k, metrics in report.macro.items()},
        "included_query_count": report.included_query_count,
        "skipped_query_count": report.skipped_query_count,
        "metadata": report.metadata,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Sweep harness


@dataclass(frozen=True)
class SweepCell:
    row_label: str
    col_label: str
    report: MetricsReport | None  # None for the undefined empty-input cell


@dataclass(frozen=True)
class SweepResult:
    mode: str
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    cells: tuple[SweepCell, ...]
    ks: tuple[int, ...]


def run_config(
    corpus: Corpus,
    texts: Mapping[str, str],
    embed_texts,
    ks: Sequence[int],
    metadata: Mapping[str, str] | None = None,
) -> MetricsReport:
    """Embed per-topic texts with the supplied backend callable, rank every
    topic and evaluate. embed_texts maps {id: text} -> {id: DocVector}."""
    vectors = embed_texts(texts)
    matrix = pairwise(vectors)
    max_k = max(ks)
    rankings = {qid: top_k(matrix, qid, max_k) for qid in matrix.topic_ids}
    return evaluate(rankings, corpus, ks, metadata=metadata)


def sweep_segments(
    corpus: Corpus,
    selectors: Sequence[SegmentSelector],
    embed_texts,
    ks: Sequence[int],
    summaries: Mapping[str, str] | None = None,
) -> SweepResult:
    """One evaluation per segment selector."""
    if not selectors:
        raise ValueError("no sweep configurations given")
    cells = []
    labels = []
    for selector in selectors:
        label = "+".join(selector.parts)
        labels.append(label)
        texts = {t.id: select_text(t, selector, summaries) for t in corpus.topics}
        report = run_config(corpus, texts, embed_texts, ks, metadata={"input": label})
        cells.append(SweepCell(row_label=label, col_label="metrics", report=report))
    return SweepResult(
        mode="segments",
        row_labels=tuple(labels),
        col_labels=("metrics",),
        cells=tuple(cells),
        ks=tuple(sorted(set(ks))),
    )


TABLE1_ROW_LABELS = ("abstract_only", "main_kacers1", "main_kacers2", "main_kacers3")
TABLE1_COL_LABELS = ("main_only", "abstract_kacers1", "abstract_kacers2", "abstract_kacers3")


def sweep_table1(
    corpus: Corpus,
    scorer,
    embed_texts,
    ks: Sequence[int],
) -> SweepResult:
    """The 4x4 summary-combination grid: each axis is either the segment
    omitted or summarized at t in {1, 2, 3}. The both-omitted cell (row
    abstract_only x column main_only) has no input text and stays empty,
    leaving 15 populated cells.
    """
    from .kacers import summarize

    def summarized(topic, segment: str, t: int | None) -> str | None:
        if t is None:
            return None
        text = topic.main if segment == "main" else topic.abstract
        if not text.strip() or not topic.keywords:
            return ""
        return summarize(text, topic.keywords, t, scorer).text

    cells = []
    for ri, n_main in enumerate((None, 1, 2, 3)):
        for ci, n_abs in enumerate((None, 1, 2, 3)):
            row_label = TABLE1_ROW_LABELS[ri]
            col_label = TABLE1_COL_LABELS[ci]
            if n_main is None and n_abs is None:
                cells.append(SweepCell(row_label=row_label, col_label=col_label, report=None))
                continue
            texts = {}
            for topic in corpus.topics:
                parts = [
                    summarized(topic, "main", n_main),
                    summarized(topic, "abstract", n_abs),
                ]
                texts[topic.id] = " ".join(p for p in parts if p)
            report = run_config(
                corpus,
                texts,
                embed_texts,
                ks,
                metadata={"input": f"{row_label} x {col_label}", "order": "main-then-abstract"},
            )
            cells.append(SweepCell(row_label=row_label, col_label=col_label, report=report))
    return SweepResult(
        mode="table1",
        row_labels=TABLE1_ROW_LABELS,
        col_labels=TABLE1_COL_LABELS,
        cells=tuple(cells),
        ks=tuple(sorted(set(ks))),
    )


def sweep_to_csv(result: SweepResult, metric: str = "recall", k: int | None = None) -> str:
    """table1 mode: a grid of one metric@k with the undefined cell blank.
    segments mode: one row per configuration, all metric@k columns."""
    k = k if k is not None else max(result.ks)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if result.mode == "table1":
        by_pos = {(c.row_label, c.col_label): c for c in result.cells}
        writer.writerow([f"{metric}@{k}"] + list(result.col_labels))
        for row_label in result.row_labels:
            row = [row_label]
            for col_label in result.col_labels:
                cell = by_pos.get((row_label, col_label))
                if cell is None or cell.report is None:
                    row.append("")
                else:
                    row.append(repr(cell.report.macro[k][metric]))
            writer.writerow(row)
    else:
        writer.writerow(
            ["input"] + [f"{name}@{kk}" for kk in result.ks for name in METRIC_NAMES]
        )
        for cell in result.cells:
            row = [cell.row_label] + [
                repr(cell.report.macro[kk][name])
                for kk in result.ks
                for name in METRIC_NAMES
            ]
            writer.writerow(row)
    return buf.getvalue()


def sweep_to_json(result: SweepResult) -> str:
    payload = {
        "mode": result.mode,
        "ks": list(result.ks),
        "rows": list(result.row_labels),
        "columns": list(result.col_labels),
        "cells": [
            {
                "row": cell.row_label,
                "column": cell.col_label,
                "macro": (
                    {str(k): m for k, m in cell.report.macro.items()}
                    if cell.report is not None
                    else None
                ),
            }
            for cell in result.cells
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
