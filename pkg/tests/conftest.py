from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from boksim.embed import DocVector

FIXTURES = Path(__file__).parent / "fixtures"

# Ranking order for the GS-14 fixture query, best first.
GS14_RANK_ORDER = [
    "GS-11",
    "GS-13",
    "GS-12",
    "GS-15",
    "DA-11",
    "CV-26",
    "FC-03",
    "GS-04",
    "FC-24",
    "FC-35",
]


def make_topic(topic_id: str, **overrides) -> dict:
    base = {
        "id": topic_id,
        "title": "",
        "keywords": [],
        "abstract": "",
        "main": "",
        "learning_objectives": [],
        "assessment_questions": [],
        "related": [],
    }
    base.update(overrides)
    return base


def write_corpus(path: Path, topics: list[dict]) -> Path:
    path.write_text(json.dumps({"topics": topics}), encoding="utf-8")
    return path


@pytest.fixture
def gs14_path() -> Path:
    return FIXTURES / "gs14.json"


def gs14_rank_vectors() -> dict[str, DocVector]:
    """Unit vectors engineered so GS-14's candidate ranking reproduces
    GS14_RANK_ORDER: candidate i sits at cosine 0.95 - 0.05*i from the query."""
    dim = len(GS14_RANK_ORDER) + 2
    vectors = {"GS-14": DocVector("fixture", np.eye(dim)[0])}
    for i, cid in enumerate(GS14_RANK_ORDER):
        c = 0.95 - 0.05 * i
        vec = c * np.eye(dim)[0] + np.sqrt(1.0 - c * c) * np.eye(dim)[i + 1]
        vectors[cid] = DocVector("fixture", vec)
    return vectors


def cluster_corpus(tmp_path: Path) -> Path:
    """Three vocabulary-disjoint clusters of five topics; every topic's
    related list is its four cluster-mates."""
    words = {
        "AA": ["terrain", "elevation", "slope", "contour", "viewshed", "raster"],
        "BB": ["parcel", "zoning", "cadastre", "easement", "deed", "survey"],
        "CC": ["routing", "network", "shortest", "path", "impedance", "turn"],
    }
    topics = []
    for code, vocab in words.items():
        ids = [f"{code}-{i:02d}" for i in range(1, 6)]
        for i, tid in enumerate(ids):
            # rotate the cluster vocabulary so topics differ but overlap heavily
            chosen = vocab[i % len(vocab):] + vocab[: i % len(vocab)]
            sentences = [
                f"The {chosen[0]} and {chosen[1]} govern the {chosen[2]} analysis.",
                f"Analysts combine {chosen[3]} with {chosen[4]} when modeling {chosen[5]}.",
                f"A {chosen[1]} layer refines the {chosen[0]} model.",
            ]
            topics.append(
                make_topic(
                    tid,
                    title=f"{chosen[0].title()} Methods",
                    keywords=[chosen[0], chosen[2]],
                    abstract=sentences[0],
                    main=" ".join(sentences),
                    related=[other for other in ids if other != tid],
                )
            )
    return write_corpus(tmp_path / "clusters.json", topics)
