"""Command-line pipeline: ingest -> summarize -> embed -> rank -> evaluate,
plus the sweep and knowledge-area analysis stages.

Every stage reads files, writes files under --out and never mutates its
inputs, so stages are independently re-runnable and cacheable. Settings
come from defaults, then an INI-style config file, then flags; the
BOKSIM_PROVIDER environment variable overrides the provider endpoint.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from . import embed as embedmod
from . import evalmetrics, kacers, kanalysis, simrank, textprep
from .corpus import (
    Corpus,
    CorpusError,
    SegmentSelector,
    corpus_stats,
    corpus_to_json,
    load_corpus,
    select_text,
)
from .provider import ProviderError, WireProvider

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

DEFAULTS = {
    "backend": "tfidf",
    "rank_r": 53,
    "seed": 42,
    "segments": "title,keyword,abstract,main",
    "kacers_t": None,
    "n_main": 3,
    "n_abs": 2,
    "scorer": None,  # embedding when vectors configured, else lexical
    "k": "1,2,3,4,5,10",
    "mode": "strict",
    "jobs": 1,
    "format": "json",
    "sweep_mode": "table1",
    "pvdbow_dim": 300,
    "pvdbow_epochs": 40,
    "pvdbow_negative": 5,
    "pvdbow_lr": 0.025,
}


class CliError(Exception):
    """Validation failure surfaced to the user (exit code 1)."""


@dataclass
class RunConfig:
    corpus: str
    out: str
    backend: str
    rank_r: int
    seed: int
    vectors: str | None
    provider: str | None
    segments: str
    kacers_t: int | None
    n_main: int | None
    n_abs: int | None
    scorer: str | None
    ks: list[int]
    mode: str  # strict | lenient
    jobs: int
    fmt: str
    sweep_mode: str
    stopwords: str | None
    pvdbow_dim: int
    pvdbow_epochs: int
    pvdbow_negative: int
    pvdbow_lr: float


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boksim",
        description="Measure semantic similarity between topics of a segmented "
        "body-of-knowledge corpus and evaluate rankings against "
        "human-labeled related topics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "ingest": "Validate a corpus snapshot and report its statistics.",
        "stats": "Write corpus statistics to the output directory.",
        "summarize": "Build the keyword-aware summary cache for every topic.",
        "embed": "Embed every topic's selected text with the chosen backend.",
        "rank": "Compute the pairwise similarity matrix and top-k rankings.",
        "evaluate": "Score rankings against the human-labeled related topics.",
        "sweep": "Run the segment/summary comparison grid.",
        "analyze": "Aggregate rankings into knowledge-area chord statistics.",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        _add_common_flags(p)
    return parser


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI-style config file; flags override it.")
    p.add_argument("--corpus", help="Corpus snapshot JSON file.")
    p.add_argument("--out", help="Output directory for artifacts (default: out).")
    p.add_argument(
        "--backend",
        choices=["tfidf", "lsa", "avg", "pvdbow", "external"],
        help="Document embedding backend.",
    )
    p.add_argument("--rank-r", type=int, dest="rank_r", help="LSA rank (default 53).")
    p.add_argument("--seed", type=int, help="Seed for all randomized stages (default 42).")
    p.add_argument("--vectors", help="Pretrained word-vectors file (token + floats per line).")
    p.add_argument(
        "--provider",
        help="Provider endpoint, host:port or stdio:<cmd>; env BOKSIM_PROVIDER overrides.",
    )
    p.add_argument(
        "--segments",
        help="Comma list of segments: title,keyword,abstract,main,learnobj,iaq,semantic_summary.",
    )
    p.add_argument(
        "--kacers-t",
        type=int,
        dest="kacers_t",
        help="Shorthand: use this t for both the main and abstract summaries.",
    )
    p.add_argument(
        "--n-main",
        dest="n_main",
        help="Sentences per keyword for the main-segment summary, or 'none' to pass through.",
    )
    p.add_argument(
        "--n-abs",
        dest="n_abs",
        help="Sentences per keyword for the abstract summary, or 'none' to pass through.",
    )
    p.add_argument(
        "--scorer",
        choices=["lexical", "embedding", "external"],
        help="Keyword-sentence scorer (default: embedding when --vectors is set, else lexical).",
    )
    p.add_argument("--k", help="Comma list of ranking cutoffs, e.g. 1,2,4,10.")
    strictness = p.add_mutually_exclusive_group()
    strictness.add_argument(
        "--strict", action="store_true", help="Reject dangling related ids (default)."
    )
    strictness.add_argument(
        "--lenient", action="store_true", help="Drop unresolvable related ids with a warning."
    )
    p.add_argument("--jobs", type=int, help="Worker count for per-topic stages (default 1).")
    p.add_argument(
        "--format", choices=["csv", "json", "plot"], help="Chord export format (analyze)."
    )
    p.add_argument("--mode", dest="sweep_mode", choices=["table1", "segments"],
                   help="Sweep grid: table1 (summary combinations) or segments.")
    p.add_argument("--stopwords", help="Stopword file overriding the built-in list.")


def _load_config_file(path: str | None) -> dict[str, str]:
    if path is None:
        return {}
    if not Path(path).is_file():
        raise CliError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    text = Path(path).read_text(encoding="utf-8")
    if not text.lstrip().startswith("["):
        text = "[boksim]\n" + text
    parser.read_string(text)
    merged: dict[str, str] = {}
    for section in parser.sections():
        merged.update(parser[section])
    return merged


def _merged(args: argparse.Namespace) -> RunConfig:
    cfg = _load_config_file(args.config)

    def pick(flag_name: str, cfg_key: str, default):
        value = getattr(args, flag_name, None)
        if value is not None and value is not False:
            return value
        if cfg_key in cfg:
            return cfg[cfg_key]
        return default

    def as_int(value, name: str) -> int:
        try:
            return int(value)
        except (TypeError, ValueError):
            raise CliError(f"{name} must be an integer, got {value!r}") from None

    def as_optional_count(value, name: str) -> int | None:
        if value is None or str(value).lower() == "none":
            return None
        n = as_int(value, name)
        if n < 1:
            raise CliError(f"{name} must be >= 1 or 'none'")
        return n

    mode = "strict"
    if args.lenient or cfg.get("mode") == "lenient":
        mode = "lenient"
    if args.strict:
        mode = "strict"

    ks_raw = str(pick("k", "k", DEFAULTS["k"]))
    try:
        ks = sorted({int(part) for part in ks_raw.split(",") if part.strip()})
    except ValueError:
        raise CliError(f"--k must be a comma list of integers, got {ks_raw!r}") from None
    if not ks or ks[0] < 1:
        raise CliError("--k values must all be >= 1")

    kacers_t = as_optional_count(pick("kacers_t", "kacers_t", DEFAULTS["kacers_t"]), "--kacers-t")
    n_main = as_optional_count(pick("n_main", "n_main", DEFAULTS["n_main"]), "--n-main")
    n_abs = as_optional_count(pick("n_abs", "n_abs", DEFAULTS["n_abs"]), "--n-abs")
    if kacers_t is not None:
        n_main = kacers_t
        n_abs = kacers_t

    provider = os.environ.get("BOKSIM_PROVIDER") or pick("provider", "provider", None)
    vectors = pick("vectors", "vectors", None)
    scorer = pick("scorer", "scorer", DEFAULTS["scorer"])
    if scorer is None:
        scorer = "embedding" if vectors else "lexical"

    corpus = pick("corpus", "corpus", None)
    if corpus is None:
        raise CliError("--corpus is required (or set corpus= in the config file)")

    return RunConfig(
        corpus=str(corpus),
        out=str(pick("out", "out", "out")),
        backend=str(pick("backend", "backend", DEFAULTS["backend"])),
        rank_r=as_int(pick("rank_r", "rank_r", DEFAULTS["rank_r"]), "--rank-r"),
        seed=as_int(pick("seed", "seed", DEFAULTS["seed"]), "--seed"),
        vectors=str(vectors) if vectors else None,
        provider=str(provider) if provider else None,
        segments=str(pick("segments", "segments", DEFAULTS["segments"])),
        kacers_t=kacers_t,
        n_main=n_main,
        n_abs=n_abs,
        scorer=str(scorer),
        ks=ks,
        mode=mode,
        jobs=max(1, as_int(pick("jobs", "jobs", DEFAULTS["jobs"]), "--jobs")),
        fmt=str(pick("format", "format", DEFAULTS["format"])),
        sweep_mode=str(pick("sweep_mode", "sweep_mode", DEFAULTS["sweep_mode"])),
        stopwords=pick("stopwords", "stopwords", None),
        pvdbow_dim=as_int(cfg.get("pvdbow_dim", DEFAULTS["pvdbow_dim"]), "pvdbow_dim"),
        pvdbow_epochs=as_int(cfg.get("pvdbow_epochs", DEFAULTS["pvdbow_epochs"]), "pvdbow_epochs"),
        pvdbow_negative=as_int(cfg.get("pvdbow_negative", DEFAULTS["pvdbow_negative"]), "pvdbow_negative"),
        pvdbow_lr=float(cfg.get("pvdbow_lr", DEFAULTS["pvdbow_lr"])),
    )


# ---------------------------------------------------------------------------
# Shared stage helpers


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(config: RunConfig) -> Corpus:
    if not Path(config.corpus).is_file():
        raise CliError(f"corpus file not found: {config.corpus}")
    return load_corpus(config.corpus, mode=config.mode)


def _stopword_set(config: RunConfig) -> frozenset[str]:
    if config.stopwords is None:
        return textprep.DEFAULT_STOPWORDS
    if not Path(config.stopwords).is_file():
        raise CliError(f"stopword file not found: {config.stopwords}")
    return textprep.load_stopwords(config.stopwords)


def _build_scorer(config: RunConfig):
    if config.scorer == "lexical":
        return kacers.LexicalScorer()
    if config.scorer == "embedding":
        if not config.vectors:
            raise CliError("--scorer embedding needs --vectors")
        return kacers.EmbeddingScorer(embedmod.load_vector_table(config.vectors))
    if config.scorer == "external":
        if not config.provider:
            raise CliError("--scorer external needs --provider or BOKSIM_PROVIDER")
        return kacers.ExternalScorer(WireProvider(config.provider))
    raise CliError(f"unknown scorer {config.scorer!r}")


def _summaries_path(config: RunConfig) -> Path:
    return _out_dir(config) / "summaries.json"


def _read_summaries(config: RunConfig) -> dict[str, str]:
    path = _summaries_path(config)
    if not path.is_file():
        raise CliError(
            f"{path} not found; run the summarize stage before using semantic_summary"
        )
    cache = json.loads(path.read_text(encoding="utf-8"))
    return {tid: entry["text"] for tid, entry in cache.items()}


def _topic_texts(config: RunConfig, corpus: Corpus) -> dict[str, str]:
    selector = SegmentSelector.parse(config.segments)
    summaries = None
    if "semantic_summary" in selector.parts:
        summaries = _read_summaries(config)
    return {t.id: select_text(t, selector, summaries) for t in corpus.topics}


def _build_embedder(config: RunConfig):
    """Returns embed_texts: {id: text} -> {id: DocVector} for the backend."""
    stopwords = _stopword_set(config)

    def streams_for(texts: Mapping[str, str], phrases: bool) -> dict[str, list[str]]:
        streams = {tid: textprep.tokenize(texts[tid], stopwords) for tid in sorted(texts)}
        if phrases:
            model = textprep.fit_phrases(list(streams.values()))
            streams = {tid: textprep.apply_phrases(model, s) for tid, s in streams.items()}
        return streams

    backend = config.backend
    if backend == "tfidf":

        def embed_texts(texts: Mapping[str, str]):
            streams = streams_for(texts, phrases=False)
            model = embedmod.fit_tfidf(list(streams.values()))
            return {tid: embedmod.embed_tfidf(model, s) for tid, s in streams.items()}

    elif backend == "lsa":

        def embed_texts(texts: Mapping[str, str]):
            streams = streams_for(texts, phrases=True)
            model = embedmod.fit_tfidf(list(streams.values()))
            limit = min(model.vocab_size, len(streams))
            rank = min(config.rank_r, limit)  # clamp for small corpora
            lsa = embedmod.fit_lsa(model, list(streams.values()), rank=rank, seed=config.seed)
            return {tid: embedmod.embed_lsa(lsa, s) for tid, s in streams.items()}

    elif backend == "avg":
        if not config.vectors:
            raise CliError("--backend avg needs --vectors")
        table = embedmod.load_vector_table(config.vectors)

        def embed_texts(texts: Mapping[str, str]):
            streams = streams_for(texts, phrases=False)
            return {tid: embedmod.embed_avg(table, s) for tid, s in streams.items()}

    elif backend == "pvdbow":

        def embed_texts(texts: Mapping[str, str]):
            streams = streams_for(texts, phrases=True)
            model = embedmod.fit_pvdbow(
                streams,
                dim=config.pvdbow_dim,
                epochs=config.pvdbow_epochs,
                negative=config.pvdbow_negative,
                lr=config.pvdbow_lr,
                seed=config.seed,
            )
            return {tid: embedmod.pvdbow_vector(model, tid) for tid in streams}

    elif backend == "external":
        if not config.provider:
            raise CliError("--backend external needs --provider or BOKSIM_PROVIDER")
        provider = WireProvider(config.provider)

        def embed_texts(texts: Mapping[str, str]):
            ids = sorted(texts)
            vectors = embedmod.embed_external(provider, [texts[tid] for tid in ids])
            return dict(zip(ids, vectors))

    else:
        raise CliError(f"unknown backend {backend!r}")

    return embed_texts


def _write(path: Path, payload: str) -> None:
    path.write_text(payload, encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_ingest(config: RunConfig) -> int:
    corpus = _load(config)
    stats = corpus_stats(corpus)
    out = _out_dir(config)
    _write(
        out / "load_report.json",
        json.dumps(
            {
                "mode": config.mode,
                "topics": stats.topic_count,
                "dropped_related": corpus.load_report.dropped_related,
                "ignored_keys": corpus.load_report.ignored_keys,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    _write(
        out / "corpus.normalized.json",
        json.dumps(corpus_to_json(corpus), indent=2, sort_keys=True) + "\n",
    )
    _print_stats(stats, corpus)
    return EXIT_OK


def _print_stats(stats, corpus: Corpus) -> None:
    print(f"topics: {stats.topic_count}")
    kas = " ".join(f"{ka}={n}" for ka, n in stats.ka_counts.items())
    print(f"knowledge areas: {kas}")
    print(
        "related per topic: "
        f"mean={stats.related_mean:.2f} min={stats.related_min} max={stats.related_max}"
    )
    print(f"topics with no related labels: {stats.empty_related_count}")
    if corpus.load_report.warnings:
        print(
            f"load warnings: {corpus.load_report.dropped_related} related ids dropped, "
            f"{corpus.load_report.ignored_keys} unknown keys ignored"
        )


def cmd_stats(config: RunConfig) -> int:
    corpus = _load(config)
    stats = corpus_stats(corpus)
    out = _out_dir(config)
    _write(
        out / "stats.json",
        json.dumps(
            {
                "topic_count": stats.topic_count,
                "ka_counts": stats.ka_counts,
                "related_mean": stats.related_mean,
                "related_min": stats.related_min,
                "related_max": stats.related_max,
                "empty_related_count": stats.empty_related_count,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    _print_stats(stats, corpus)
    return EXIT_OK


def cmd_summarize(config: RunConfig) -> int:
    corpus = _load(config)
    scorer = _build_scorer(config)

    def entry(topic):
        if topic.keywords:
            n_main, n_abs = config.n_main, config.n_abs
        else:
            n_main, n_abs = None, None  # passthrough when no keywords guide selection
        return topic.id, kacers.summary_cache_entry(topic, n_main, n_abs, scorer)

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            entries = list(pool.map(entry, corpus.topics))
    else:
        entries = [entry(t) for t in corpus.topics]
    cache = dict(entries)
    _write(
        _summaries_path(config), json.dumps(cache, indent=2, sort_keys=True) + "\n"
    )
    passthrough = sum(1 for _, e in cache.items() if e["n_main"] is None and e["n_abs"] is None)
    print(f"summarized {len(cache)} topics ({passthrough} passthrough without keywords)")
    return EXIT_OK


def cmd_embed(config: RunConfig) -> int:
    corpus = _load(config)
    texts = _topic_texts(config, corpus)
    embed_texts = _build_embedder(config)
    vectors = embed_texts(texts)
    zero_docs = sorted(tid for tid, v in vectors.items() if not v.values.any())
    dims = {v.dim for v in vectors.values()}
    payload = {
        "backend": config.backend,
        "dim": dims.pop(),
        "seed": config.seed,
        "segments": config.segments,
        "vectors": {tid: [float(x) for x in v.values] for tid, v in sorted(vectors.items())},
    }
    out = _out_dir(config)
    _write(out / "embeddings.json", json.dumps(payload, sort_keys=True) + "\n")
    if zero_docs:
        print(f"warning: {len(zero_docs)} document(s) embedded to the zero vector: "
              + ", ".join(zero_docs))
    print(f"embedded {len(vectors)} topics with backend {config.backend}")
    return EXIT_OK


def _read_embeddings(config: RunConfig) -> dict[str, embedmod.DocVector]:
    path = _out_dir(config) / "embeddings.json"
    if not path.is_file():
        raise CliError(f"{path} not found; run the embed stage first")
    payload = json.loads(path.read_text(encoding="utf-8"))
    backend = payload["backend"]
    return {
        tid: embedmod.DocVector(backend, values)
        for tid, values in payload["vectors"].items()
    }


def cmd_rank(config: RunConfig) -> int:
    vectors = _read_embeddings(config)
    matrix = simrank.pairwise(vectors)
    max_k = max(config.ks)
    rankings = [simrank.top_k(matrix, qid, max_k) for qid in matrix.topic_ids]
    out = _out_dir(config)
    _write(out / "rankings.jsonl", simrank.rankings_to_jsonl(rankings))
    _write(out / "similarity.csv", simrank.matrix_to_csv(matrix))
    print(f"ranked {len(rankings)} queries at k={max_k}")
    return EXIT_OK


def _read_rankings(config: RunConfig) -> dict[str, simrank.Ranking]:
    path = _out_dir(config) / "rankings.jsonl"
    if not path.is_file():
        raise CliError(f"{path} not found; run the rank stage first")
    rankings = simrank.rankings_from_jsonl(path.read_text(encoding="utf-8"))
    return {r.query_id: r for r in rankings}


def cmd_evaluate(config: RunConfig) -> int:
    corpus = _load(config)
    rankings = _read_rankings(config)
    max_k = max(config.ks)
    for ranking in rankings.values():
        if ranking.k < max_k and len(ranking.entries) >= ranking.k:
            raise CliError(
                f"rankings were truncated at k={ranking.k} but evaluation needs "
                f"k={max_k}; re-run the rank stage with --k {max_k}"
            )
    report = evalmetrics.evaluate(
        rankings,
        corpus,
        config.ks,
        metadata={"backend": config.backend, "seed": str(config.seed)},
    )
    out = _out_dir(config)
    _write(out / "metrics.csv", evalmetrics.report_to_csv(report))
    _write(out / "metrics.json", evalmetrics.report_to_json(report))
    for k in config.ks:
        macro = report.macro[k]
        print(
            f"k={k}: recall={macro['recall']:.4f} precision={macro['precision']:.4f} "
            f"f={macro['f']:.4f} balanced_accuracy={macro['balanced_accuracy']:.4f}"
        )
    print(
        f"queries: {report.included_query_count} evaluated, "
        f"{report.skipped_query_count} skipped (no labels)"
    )
    return EXIT_OK


def cmd_sweep(config: RunConfig) -> int:
    corpus = _load(config)
    embed_texts = _build_embedder(config)
    if config.sweep_mode == "table1":
        scorer = _build_scorer(config)
        result = evalmetrics.sweep_table1(corpus, scorer, embed_texts, config.ks)
    else:
        selectors = [SegmentSelector.parse(part) for part in config.segments.split(";")]
        summaries = None
        if any("semantic_summary" in s.parts for s in selectors):
            summaries = _read_summaries(config)
        result = evalmetrics.sweep_segments(corpus, selectors, embed_texts, config.ks, summaries)
    out = _out_dir(config)
    _write(out / "sweep.csv", evalmetrics.sweep_to_csv(result))
    _write(out / "sweep.json", evalmetrics.sweep_to_json(result))
    populated = sum(1 for c in result.cells if c.report is not None)
    print(f"sweep {config.sweep_mode}: {populated} populated cell(s)")
    return EXIT_OK


def cmd_analyze(config: RunConfig) -> int:
    corpus = _load(config)
    rankings = _read_rankings(config)
    k = max(config.ks)
    matrix = kanalysis.chord_matrix(rankings, corpus, k)
    out = _out_dir(config)
    suffix = {"json": "json", "csv": "csv", "plot": "svg"}[config.fmt]
    kanalysis.export_chords(matrix, config.fmt, str(out / f"chords.{suffix}"))
    summary = kanalysis.ka_summary(matrix)
    print(
        f"chords at k={k}: intra-max={summary.intra_argmax} "
        f"heads-max={summary.heads_argmax} tails-max={summary.tails_argmax}"
    )
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "summarize": cmd_summarize,
    "embed": cmd_embed,
    "rank": cmd_rank,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _merged(args)
        return COMMANDS[args.command](config)
    except (CliError, CorpusError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
