"""Document embedding backends.

All backends produce DocVector values and are interchangeable in the
ranking pipeline: TF-IDF, LSA over the TF-IDF term-document matrix,
word-vector averaging over a pretrained table, PV-DBOW paragraph vectors,
and external transformer embeddings over the provider wire protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .provider import Provider, ProviderError


@dataclass(frozen=True, eq=False)
class DocVector:
    backend_id: str
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("DocVector needs a non-empty 1-d vector")
        if not np.all(np.isfinite(values)):
            raise ValueError("DocVector values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return int(self.values.size)


def _normalize(values: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(values)
    if norm == 0.0:
        return values
    return values / norm


# ---------------------------------------------------------------------------
# TF-IDF


@dataclass(frozen=True, eq=False)
class TfidfModel:
    vocabulary: dict[str, int]  # token -> dense column index, 0..V-1
    idf: np.ndarray  # per-token weights, indexed by vocabulary
    doc_count: int

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)


def fit_tfidf(docs: Iterable[Sequence[str]]) -> TfidfModel:
    """Fit vocabulary and smoothed idf: idf(t) = ln((1+N)/(1+df(t))) + 1."""
    docs = [list(d) for d in docs]
    if not docs:
        raise ValueError("cannot fit tf-idf on an empty document collection")
    df: dict[str, int] = {}
    for doc in docs:
        for token in set(doc):
            df[token] = df.get(token, 0) + 1
    vocabulary = {token: i for i, token in enumerate(sorted(df))}
    n = len(docs)
    idf = np.zeros(len(vocabulary))
    for token, col in vocabulary.items():
        idf[col] = math.log((1 + n) / (1 + df[token])) + 1.0
    return TfidfModel(vocabulary=vocabulary, idf=idf, doc_count=n)


def embed_tfidf(model: TfidfModel, doc: Sequence[str]) -> DocVector:
    """Term counts weighted by idf, L2-normalized; all-OOV docs map to zero."""
    return DocVector("tfidf", _normalize(_tfidf_raw(model, doc)))


def _tfidf_raw(model: TfidfModel, doc: Sequence[str]) -> np.ndarray:
    values = np.zeros(model.vocab_size)
    for token in doc:
        col = model.vocabulary.get(token)
        if col is not None:
            values[col] += model.idf[col]
    return values


# ---------------------------------------------------------------------------
# LSA


@dataclass(frozen=True, eq=False)
class LsaModel:
    tfidf: TfidfModel
    rank: int
    term_basis: np.ndarray  # V x r, left singular vectors
    singular_values: np.ndarray  # length r, non-increasing


def randomized_svd(
    matrix: np.ndarray,
    rank: int,
    seed: int,
    oversample: int = 10,
    power_iters: int = 2,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Seeded randomized truncated SVD (sketch + power iterations).

    Exact to machine precision whenever rank + oversample covers the
    smaller matrix dimension (always true for test-scale corpora at the
    default LSA rank); beyond that it is the usual sketched approximation.
    Columns are sign-normalized so results are comparable across runs.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    m, n = matrix.shape
    if not 1 <= rank <= min(m, n):
        raise ValueError(f"rank must be in [1, {min(m, n)}], got {rank}")
    sketch = min(rank + oversample, n)
    rng = np.random.default_rng(seed)
    sample = rng.standard_normal((n, sketch))
    q, _ = np.linalg.qr(matrix @ sample)
    for _ in range(power_iters):
        q, _ = np.linalg.qr(matrix.T @ q)
        q, _ = np.linalg.qr(matrix @ q)
    small = q.T @ matrix
    u_small, s, vt = np.linalg.svd(small, full_matrices=False)
    u = q @ u_small
    u, vt = sign_align(u[:, :rank], vt[:rank, :])
    return u, s[:rank], vt


def sign_align(u: np.ndarray, vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip singular-vector pairs so each U column's largest-magnitude
    component is positive; removes the SVD's per-column sign ambiguity."""
    u = u.copy()
    vt = vt.copy()
    for j in range(u.shape[1]):
        pivot = int(np.argmax(np.abs(u[:, j])))
        if u[pivot, j] < 0:
            u[:, j] = -u[:, j]
            vt[j, :] = -vt[j, :]
    return u, vt


def fit_lsa(
    model: TfidfModel,
    docs: Iterable[Sequence[str]],
    rank: int = 53,
    seed: int = 42,
) -> LsaModel:
    """Truncated SVD of the V x N matrix whose columns are the docs'
    normalized TF-IDF vectors."""
    docs = [list(d) for d in docs]
    if not docs:
        raise ValueError("cannot fit LSA on an empty document collection")
    limit = min(model.vocab_size, len(docs))
    if not 1 <= rank <= limit:
        raise ValueError(f"rank must be in [1, {limit}], got {rank}")
    matrix = np.column_stack([_normalize(_tfidf_raw(model, d)) for d in docs])
    term_basis, singular_values, _ = randomized_svd(matrix, rank, seed)
    return LsaModel(tfidf=model, rank=rank, term_basis=term_basis, singular_values=singular_values)


def embed_lsa(model: LsaModel, doc: Sequence[str]) -> DocVector:
    """Project the doc's TF-IDF vector onto the term basis, L2-normalized."""
    raw = _normalize(_tfidf_raw(model.tfidf, doc))
    projected = model.term_basis.T @ raw
    return DocVector("lsa", _normalize(projected))


# ---------------------------------------------------------------------------
# Pretrained word-vector averaging


@dataclass(frozen=True, eq=False)
class VectorTable:
    dim: int
    entries: dict[str, np.ndarray]


def load_vector_table(path: str) -> VectorTable:
    """Read a text vectors file: one 'token v1 .. vd' entry per line."""
    entries: dict[str, np.ndarray] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split(" ")
            token, comps = fields[0], fields[1:]
            if not comps:
                raise ValueError(f"{path}:{lineno}: entry has no vector components")
            if dim is None:
                dim = len(comps)
            elif len(comps) != dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} components, found {len(comps)}"
                )
            if token in entries:
                raise ValueError(f"{path}:{lineno}: duplicate token {token!r}")
            try:
                entries[token] = np.array([float(c) for c in comps])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric component: {exc}") from exc
    if dim is None:
        raise ValueError(f"{path}: vectors file is empty")
    return VectorTable(dim=dim, entries=entries)


def embed_avg(table: VectorTable, doc: Sequence[str]) -> DocVector:
    """Mean of the vectors of in-table tokens; all-OOV docs map to zero."""
    found = [table.entries[t] for t in doc if t in table.entries]
    if not found:
        return DocVector("avg", np.zeros(table.dim))
    return DocVector("avg", np.mean(found, axis=0))


# ---------------------------------------------------------------------------
# PV-DBOW paragraph vectors


@dataclass(frozen=True, eq=False)
class PvdbowModel:
    dim: int
    doc_vectors: dict[str, np.ndarray]
    word_output_weights: np.ndarray  # vocab x dim
    vocabulary: dict[str, int]
    epochs: int
    negative: int
    lr: float
    seed: int


def fit_pvdbow(
    docs: Mapping[str, Sequence[str]],
    dim: int = 300,
    epochs: int = 40,
    negative: int = 5,
    lr: float = 0.025,
    seed: int = 42,
) -> PvdbowModel:
    """Train per-document vectors by predicting each document's own tokens
    with negative sampling (noise = unigram^0.75), linear lr decay.

    Single-threaded on purpose: the result is a pure function of the seed.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    items = sorted((doc_id, list(tokens)) for doc_id, tokens in docs.items())
    if not items:
        raise ValueError("cannot train on an empty document collection")

    counts: dict[str, int] = {}
    for _, tokens in items:
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
    vocabulary = {token: i for i, token in enumerate(sorted(counts))}
    if not vocabulary:
        raise ValueError("documents contain no tokens")

    noise = np.array([counts[t] ** 0.75 for t in sorted(counts)])
    noise_cdf = np.cumsum(noise / noise.sum())

    rng = np.random.default_rng(seed)
    doc_mat = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(items), dim))
    syn1 = np.zeros((len(vocabulary), dim))

    total = epochs * sum(len(tokens) for _, tokens in items)
    min_lr = 1e-4
    processed = 0
    for _ in range(epochs):
        for di, (_, tokens) in enumerate(items):
            for token in tokens:
                alpha = max(min_lr, lr * (1.0 - processed / total))
                processed += 1
                target = vocabulary[token]
                negatives = np.searchsorted(noise_cdf, rng.random(negative))
                dvec = doc_mat[di]
                grad = np.zeros(dim)
                for word_idx, label in [(target, 1.0)] + [
                    (int(w), 0.0) for w in negatives if int(w) != target
                ]:
                    f = _sigmoid(dvec @ syn1[word_idx])
                    g = (label - f) * alpha
                    grad += g * syn1[word_idx]
                    syn1[word_idx] += g * dvec
                doc_mat[di] += grad

    doc_vectors = {doc_id: doc_mat[i].copy() for i, (doc_id, _) in enumerate(items)}
    return PvdbowModel(
        dim=dim,
        doc_vectors=doc_vectors,
        word_output_weights=syn1,
        vocabulary=vocabulary,
        epochs=epochs,
        negative=negative,
        lr=lr,
        seed=seed,
    )


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-min(x, 60.0)))
    z = math.exp(max(x, -60.0))
    return z / (1.0 + z)


def pvdbow_vector(model: PvdbowModel, doc_id: str) -> DocVector:
    if doc_id not in model.doc_vectors:
        raise KeyError(f"no trained vector for document {doc_id!r}")
    return DocVector("pvdbow", model.doc_vectors[doc_id])


# ---------------------------------------------------------------------------
# External provider embeddings


def embed_external(provider: Provider, texts: Sequence[str]) -> list[DocVector]:
    """One vector per text from a wire-protocol provider, order preserved."""
    info = provider.info()
    if not texts:
        return []
    vectors = provider.embed(list(texts))
    if len(vectors) != len(texts):
        raise ProviderError(
            f"provider returned {len(vectors)} vectors for {len(texts)} texts"
        )
    out = []
    for i, vec in enumerate(vectors):
        values = np.asarray(vec, dtype=np.float64)
        if values.ndim != 1 or values.size != info.dim:
            raise ProviderError(
                f"vector {i} has dimension {values.size}, provider declared {info.dim}"
            )
        out.append(DocVector(f"external:{info.name}", values))
    return out
