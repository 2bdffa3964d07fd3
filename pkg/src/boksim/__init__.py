"""Semantic similarity and relevance analysis for segmented
body-of-knowledge corpora."""

__version__ = "0.1.0"
