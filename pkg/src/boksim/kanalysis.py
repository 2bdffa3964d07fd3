"""Intra-/inter-knowledge-area statistics over top-k rankings.

counts[h][t] is the number of (seed in KA h, candidate in KA t) pairs
among the truncated rankings: the diagonal measures intra-KA similarity,
row sums are chord heads (seeds) and column sums chord tails (candidates).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .corpus import Corpus
from .simrank import Ranking


@dataclass(frozen=True, eq=False)
class ChordMatrix:
    ka_codes: tuple[str, ...]  # alphabetical
    counts: np.ndarray  # |KA| x |KA| non-negative ints
    k: int

    def index_of(self, ka: str) -> int:
        try:
            return self.ka_codes.index(ka)
        except ValueError:
            raise KeyError(f"unknown knowledge area {ka!r}") from None

    def row(self, ka: str) -> dict[str, int]:
        i = self.index_of(ka)
        return {
            tail: int(self.counts[i, j])
            for j, tail in enumerate(self.ka_codes)
            if self.counts[i, j] > 0
        }


def chord_matrix(rankings: Mapping[str, Ranking], corpus: Corpus, k: int) -> ChordMatrix:
    """Accumulate (seed KA, candidate KA) pair counts over top-k rankings."""
    if k < 1:
        raise ValueError("k must be >= 1")
    kas = tuple(sorted(corpus.ka_codes))
    index = {ka: i for i, ka in enumerate(kas)}
    by_id = corpus.by_id()

    def resolve(topic_id: str) -> int:
        topic = by_id.get(topic_id)
        ka = topic.knowledge_area if topic is not None else topic_id.split("-", 1)[0]
        if ka not in index:
            raise KeyError(f"cannot resolve a knowledge area for {topic_id!r}")
        return index[ka]

    counts = np.zeros((len(kas), len(kas)), dtype=np.int64)
    for qid in sorted(rankings):
        head = resolve(qid)
        for cid in rankings[qid].truncated(k).ids():
            counts[head, resolve(cid)] += 1
    return ChordMatrix(ka_codes=kas, counts=counts, k=k)


@dataclass(frozen=True)
class KaSummary:
    intra: dict[str, int]  # diagonal
    heads: dict[str, int]  # row sums (seeds)
    tails: dict[str, int]  # column sums (candidates)
    intra_argmax: str
    heads_argmax: str
    tails_argmax: str


def ka_summary(matrix: ChordMatrix) -> KaSummary:
    kas = matrix.ka_codes
    intra = {ka: int(matrix.counts[i, i]) for i, ka in enumerate(kas)}
    heads = {ka: int(matrix.counts[i, :].sum()) for i, ka in enumerate(kas)}
    tails = {ka: int(matrix.counts[:, i].sum()) for i, ka in enumerate(kas)}

    def argmax(values: dict[str, int]) -> str:
        return max(sorted(values), key=lambda ka: values[ka])  # ties -> alphabetical

    return KaSummary(
        intra=intra,
        heads=heads,
        tails=tails,
        intra_argmax=argmax(intra),
        heads_argmax=argmax(heads),
        tails_argmax=argmax(tails),
    )


# ---------------------------------------------------------------------------
# Exports


def chords_to_json(matrix: ChordMatrix) -> str:
    payload = {
        "k": matrix.k,
        "kas": list(matrix.ka_codes),
        "counts": [[int(v) for v in row] for row in matrix.counts],
    }
    return json.dumps(payload, sort_keys=True) + "\n"


def chords_from_json(text: str) -> ChordMatrix:
    obj = json.loads(text)
    return ChordMatrix(
        ka_codes=tuple(obj["kas"]),
        counts=np.array(obj["counts"], dtype=np.int64),
        k=int(obj["k"]),
    )


def chords_to_csv(matrix: ChordMatrix) -> str:
    """Header row of tail KAs, first column of head KAs. The k value rides
    in the corner cell as 'k=<k>'."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"k={matrix.k}"] + list(matrix.ka_codes))
    for i, ka in enumerate(matrix.ka_codes):
        writer.writerow([ka] + [int(v) for v in matrix.counts[i]])
    return buf.getvalue()


def chords_from_csv(text: str) -> ChordMatrix:
    rows = list(csv.reader(io.StringIO(text)))
    corner = rows[0][0]
    if not corner.startswith("k="):
        raise ValueError("chord CSV corner cell must carry k=<k>")
    kas = tuple(rows[0][1:])
    counts = np.array([[int(v) for v in row[1:]] for row in rows[1:]], dtype=np.int64)
    return ChordMatrix(ka_codes=kas, counts=counts, k=int(corner[2:]))


def chords_to_svg(matrix: ChordMatrix) -> str:
    """Grouped bar chart of intra / head-sum / tail-sum per KA.

    Rendered through matplotlib with a fixed hash salt and no date
    metadata so repeated runs emit byte-identical SVG.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    summary = ka_summary(matrix)
    kas = list(matrix.ka_codes)
    x = np.arange(len(kas))
    width = 0.27

    with plt.rc_context({"svg.hashsalt": "boksim", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(max(6.0, 0.9 * len(kas)), 4.0))
        ax.bar(x - width, [summary.intra[k] for k in kas], width, label="intra")
        ax.bar(x, [summary.heads[k] for k in kas], width, label="heads")
        ax.bar(x + width, [summary.tails[k] for k in kas], width, label="tails")
        ax.set_xticks(x)
        ax.set_xticklabels(kas)
        ax.set_ylabel(f"pairs at k={matrix.k}")
        ax.set_xlabel("knowledge area")
        ax.legend()
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def export_chords(matrix: ChordMatrix, fmt: str, path: str) -> None:
    if fmt == "json":
        payload = chords_to_json(matrix)
    elif fmt == "csv":
        payload = chords_to_csv(matrix)
    elif fmt == "plot":
        payload = chords_to_svg(matrix)
    else:
        raise ValueError(f"unknown chord export format {fmt!r}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(payload)
