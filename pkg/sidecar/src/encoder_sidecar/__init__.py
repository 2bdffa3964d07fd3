"""Provider process hosting embedding and keyword-sentence scoring models
behind a newline-delimited JSON protocol."""

__version__ = "0.1.0"
