"""Frozen-transformer sentence embedding exporter (EMB1 files)."""

from .corpus import CorpusError, read_texts
from .emb1 import read_emb1, write_emb1
from .export import ExportJob, embed_texts, export_embeddings, mean_pool

__version__ = "0.1.0"

__all__ = [
    "CorpusError",
    "ExportJob",
    "embed_texts",
    "export_embeddings",
    "mean_pool",
    "read_emb1",
    "read_texts",
    "write_emb1",
]
