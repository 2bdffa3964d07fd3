"""Cosine similarity, the pairwise similarity matrix and top-k ranking.

The cosine of two all-zero vectors is defined as 0 so degenerate documents
rank last instead of crashing the pipeline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .embed import DocVector


def cosine(a: DocVector, b: DocVector) -> float:
    """Dot product over the product of norms; 0 if either vector is zero."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    na = np.linalg.norm(a.values)
    nb = np.linalg.norm(b.values)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a.values, b.values) / (na * nb))


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    topic_ids: tuple[str, ...]
    values: np.ndarray  # N x N, symmetric, entries in [-1, 1]

    def index_of(self, topic_id: str) -> int:
        try:
            return self.topic_ids.index(topic_id)
        except ValueError:
            raise KeyError(f"unknown topic id: {topic_id!r}") from None


def pairwise(vectors: Mapping[str, DocVector]) -> SimilarityMatrix:
    """Cosine matrix over ids in canonical (sorted) order."""
    if not vectors:
        raise ValueError("no vectors given")
    ids = tuple(sorted(vectors))
    dims = {vectors[i].dim for i in ids}
    if len(dims) != 1:
        raise ValueError(f"mixed vector dimensions: {sorted(dims)}")
    backends = {vectors[i].backend_id for i in ids}
    if len(backends) != 1:
        raise ValueError(f"mixed backends: {sorted(backends)}")
    stacked = np.vstack([vectors[i].values for i in ids])
    norms = np.linalg.norm(stacked, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    unit = stacked / safe[:, None]
    values = unit @ unit.T
    values = np.clip((values + values.T) / 2.0, -1.0, 1.0)
    nonzero = norms > 0.0
    values[np.diag_indices_from(values)] = np.where(nonzero, 1.0, 0.0)
    return SimilarityMatrix(topic_ids=ids, values=values)


@dataclass(frozen=True)
class Ranking:
    query_id: str
    entries: tuple[tuple[str, float], ...]  # (candidate_id, score), score non-increasing
    k: int

    def ids(self) -> list[str]:
        return [cid for cid, _ in self.entries]

    def truncated(self, k: int) -> "Ranking":
        if k < 1:
            raise ValueError("k must be >= 1")
        return Ranking(query_id=self.query_id, entries=self.entries[:k], k=min(k, self.k))


def top_k(matrix: SimilarityMatrix, query_id: str, k: int) -> Ranking:
    """Candidates by score descending, ties broken by id ascending,
    truncated to k. The query itself is never a candidate."""
    if k < 1:
        raise ValueError("k must be >= 1")
    qi = matrix.index_of(query_id)
    scored = [
        (cid, float(matrix.values[qi, ci]))
        for ci, cid in enumerate(matrix.topic_ids)
        if ci != qi
    ]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return Ranking(query_id=query_id, entries=tuple(scored[:k]), k=k)


def rank_all(matrix: SimilarityMatrix, k: int) -> dict[str, Ranking]:
    return {qid: top_k(matrix, qid, k) for qid in matrix.topic_ids}


# ---------------------------------------------------------------------------
# Exports


def rankings_to_jsonl(rankings: Sequence[Ranking]) -> str:
    """One JSON object per line: {"query", "k", "candidates": [{"id","score"}]}."""
    lines = []
    for ranking in rankings:
        lines.append(
            json.dumps(
                {
                    "query": ranking.query_id,
                    "k": ranking.k,
                    "candidates": [
                        {"id": cid, "score": score} for cid, score in ranking.entries
                    ],
                },
                ensure_ascii=False,
                sort_keys=True,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def rankings_from_jsonl(text: str) -> list[Ranking]:
    rankings = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        rankings.append(
            Ranking(
                query_id=obj["query"],
                entries=tuple((c["id"], float(c["score"])) for c in obj["candidates"]),
                k=int(obj["k"]),
            )
        )
    return rankings


def matrix_to_csv(matrix: SimilarityMatrix) -> str:
    """CSV with a header row and first column of topic ids."""
    header = "id," + ",".join(matrix.topic_ids)
    rows = [header]
    for i, topic_id in enumerate(matrix.topic_ids):
        rows.append(topic_id + "," + ",".join(repr(float(v)) for v in matrix.values[i]))
    return "\n".join(rows) + "\n"
