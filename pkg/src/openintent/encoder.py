"""Feature extraction: hashed bag-of-words, EMB1 files, and the dense head.

Feature matrices are plain ``numpy`` arrays of shape (rows, dim) with finite
float64 entries, aligned 1:1 with an utterance list.
"""

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .validation import check_feature_matrix

EMB1_MAGIC = b"EMB1"
_TOKEN_RE = re.compile(r"\w+")

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


class EmbeddingFormatError(ValueError):
    """Raised for malformed EMB1 embedding files."""


@dataclass
class EncoderParams:
    """Dense head parameters: z = ReLU(x @ weights + bias)."""

    weights: np.ndarray  # (input_dim, feature_dim)
    bias: np.ndarray     # (feature_dim,)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ValueError("encoder weights must be 2-D and bias 1-D")
        if self.weights.shape[1] != self.bias.shape[0]:
            raise ValueError(
                f"weights {self.weights.shape} inconsistent with bias "
                f"{self.bias.shape}"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("encoder parameters contain non-finite values")

    @property
    def input_dim(self):
        return self.weights.shape[0]

    @property
    def feature_dim(self):
        return self.weights.shape[1]

    def copy(self):
        return EncoderParams(self.weights.copy(), self.bias.copy())


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _token_slot(token: str, input_dim: int, seed_bytes: bytes):
    h = _fnv1a(seed_bytes + token.encode("utf-8"))
    index = h % input_dim
    sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
    return index, sign


def tokenize(text: str):
    """Lowercased word tokens; whitespace and punctuation are separators."""
    return _TOKEN_RE.findall(text.lower())


def featurize(utterances, input_dim=2048, hash_seed=0):
    """Hashed bag-of-words features, one L2-normalized row per utterance.

    Each token contributes +/-1 (sign from one extra hash bit) to the slot
    given by a seeded 64-bit FNV-1a hash modulo ``input_dim``. Rows with no
    tokens are left all-zero.
    """
    if input_dim < 16:
        raise ValueError(f"input_dim must be >= 16, got {input_dim}")
    seed_bytes = struct.pack("<q", int(hash_seed))
    x = np.zeros((len(utterances), input_dim), dtype=np.float64)
    slot_cache = {}
    for row, utt in enumerate(utterances):
        text = utt.text if hasattr(utt, "text") else utt
        for token in tokenize(text):
            slot = slot_cache.get(token)
            if slot is None:
                slot = _token_slot(token, input_dim, seed_bytes)
                slot_cache[token] = slot
            x[row, slot[0]] += slot[1]
    norms = np.linalg.norm(x, axis=1)
    nonzero = norms > 0
    x[nonzero] /= norms[nonzero, None]
    return x


def forward_head(x, params: EncoderParams):
    """Dense ReLU head: z = ReLU(x @ W + b), shape (rows, feature_dim)."""
    x = check_feature_matrix(x, dim=params.input_dim, name="x")
    return np.maximum(x @ params.weights + params.bias, 0.0)


def save_embeddings(x, path):
    """Write a feature matrix in the EMB1 binary format.

    Layout: magic ``EMB1``, little-endian uint32 row count and dimension,
    then row-major float32 values.
    """
    x = check_feature_matrix(x, name="embeddings")
    n, h = x.shape
    path = Path(path)
    with path.open("wb") as handle:
        handle.write(EMB1_MAGIC)
        handle.write(struct.pack("<II", n, h))
        handle.write(np.ascontiguousarray(x, dtype="<f4").tobytes())


def load_embeddings(path):
    """Read an EMB1 file into an (N, H) float64 matrix.

    Raises :class:`EmbeddingFormatError` on a bad magic, truncated payload,
    or non-finite values.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < 12:
        raise EmbeddingFormatError(f"{path}: file too short for an EMB1 header")
    if blob[:4] != EMB1_MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic {blob[:4]!r}, expected 'EMB1'")
    n, h = struct.unpack("<II", blob[4:12])
    expected = 12 + 4 * n * h
    if len(blob) != expected:
        raise EmbeddingFormatError(
            f"{path}: payload has {len(blob)} bytes, expected {expected} "
            f"for {n}x{h} float32"
        )
    x = np.frombuffer(blob, dtype="<f4", offset=12).reshape(n, h).astype(np.float64)
    if not np.all(np.isfinite(x)):
        raise EmbeddingFormatError(f"{path}: embeddings contain non-finite values")
    return x
