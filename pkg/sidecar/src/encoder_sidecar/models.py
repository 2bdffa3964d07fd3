"""Transformer-backed provider: a bi-encoder for document embeddings and an
optional cross-encoder for keyword-sentence relevance scoring.

Models load eagerly at startup so a bad model name fails the process
before it accepts connections. Inputs longer than the model's sequence
limit are truncated by the model's own tokenizer.
"""

from __future__ import annotations


class TransformerBackend:
    def __init__(self, model_name: str, cross_encoder_name: str | None = None):
        try:
            from sentence_transformers import CrossEncoder, SentenceTransformer
        except ImportError as exc:  # pragma: no cover - depends on extras
            raise RuntimeError(
                "sentence-transformers is not installed; install the "
                "'models' extra or run with --mock"
            ) from exc
        self.name = model_name
        self.encoder = SentenceTransformer(model_name)
        self.cross_encoder = (
            CrossEncoder(cross_encoder_name) if cross_encoder_name else None
        )
        self.dim = int(self.encoder.get_sentence_embedding_dimension())
        self.max_tokens = int(getattr(self.encoder, "max_seq_length", 512))

    def info(self) -> dict:
        return {"name": self.name, "dim": self.dim, "max_tokens": self.max_tokens}

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            return []
        vectors = self.encoder.encode(texts, convert_to_numpy=True, show_progress_bar=False)
        return [[float(x) for x in row] for row in vectors]

    def score(self, pairs: list[list[str]]) -> list[float]:
        if not pairs:
            return []
        if self.cross_encoder is not None:
            scores = self.cross_encoder.predict(
                [(kw, sent) for kw, sent in pairs], show_progress_bar=False
            )
            return [float(s) for s in scores]
        # bi-encoder fallback: cosine of the two embeddings
        flat: list[str] = []
        for kw, sent in pairs:
            flat.extend((kw, sent))
        vectors = self.embed(flat)
        scores = []
        for i in range(0, len(vectors), 2):
            a, b = vectors[i], vectors[i + 1]
            num = sum(x * y for x, y in zip(a, b))
            da = sum(x * x for x in a) ** 0.5
            db = sum(y * y for y in b) ** 0.5
            scores.append(num / (da * db) if da and db else 0.0)
        return scores
