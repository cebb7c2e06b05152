"""Frozen-transformer sentence embeddings via masked mean pooling.

Each utterance is tokenized, run through the frozen model, and represented
by the mean of its last-hidden-layer vectors over every non-padding position
(the CLS token included). No parameter is ever updated.
"""

from dataclasses import dataclass

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .corpus import read_texts
from .emb1 import write_emb1


@dataclass
class ExportJob:
    input_path: str
    output_path: str
    model_name: str = "bert-base-uncased"
    max_length: int = 64   # token positions per row, special tokens included
    batch_size: int = 32

    def __post_init__(self):
        if self.max_length < 2:
            raise ValueError("max_length must be >= 2 (CLS plus one token)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def load_frozen(model_name):
    """Tokenizer plus a frozen, eval-mode encoder."""
    tokenizer = AutoTokenizer.from_pretrained(model_name)
    model = AutoModel.from_pretrained(model_name)
    model.eval()
    for parameter in model.parameters():
        parameter.requires_grad_(False)
    return tokenizer, model


def mean_pool(last_hidden, attention_mask):
    """Average hidden states over non-padding positions, per row."""
    mask = attention_mask.unsqueeze(-1).to(last_hidden.dtype)
    summed = (last_hidden * mask).sum(dim=1)
    counts = mask.sum(dim=1).clamp(min=1.0)
    return summed / counts


def embed_texts(texts, tokenizer, model, max_length=64, batch_size=32):
    """Embed a list of texts; rows come back in input order."""
    rows = []
    with torch.no_grad():
        for start in range(0, len(texts), batch_size):
            batch = list(texts[start:start + batch_size])
            try:
                encoded = tokenizer(batch, padding=True, truncation=True,
                                    max_length=max_length, return_tensors="pt")
            except Exception as exc:
                raise RuntimeError(
                    f"tokenization failed for rows {start}..."
                    f"{start + len(batch) - 1}: {exc}"
                ) from exc
            output = model(**encoded)
            pooled = mean_pool(output.last_hidden_state,
                               encoded["attention_mask"])
            rows.append(pooled.double().cpu().numpy())
    return np.vstack(rows)


def export_embeddings(job: ExportJob):
    """Run one export job end to end; returns the (N, H) matrix written."""
    texts = read_texts(job.input_path)
    tokenizer, model = load_frozen(job.model_name)
    matrix = embed_texts(texts, tokenizer, model,
                         max_length=job.max_length, batch_size=job.batch_size)
    write_emb1(matrix, job.output_path)
    return matrix
