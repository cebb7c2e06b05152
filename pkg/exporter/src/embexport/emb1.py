"""EMB1 binary embedding files.

Layout: magic ``EMB1`` (4 bytes), little-endian uint32 row count N and
dimension H, then N*H little-endian float32 values row-major.
"""

import struct
from pathlib import Path

import numpy as np

MAGIC = b"EMB1"


def write_emb1(matrix, path):
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError(f"embedding matrix must be 2-D, got {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("embedding matrix contains non-finite values")
    n, h = matrix.shape
    with Path(path).open("wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<II", n, h))
        handle.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def read_emb1(path):
    blob = Path(path).read_bytes()
    if len(blob) < 12 or blob[:4] != MAGIC:
        raise ValueError(f"{path}: not an EMB1 file")
    n, h = struct.unpack("<II", blob[4:12])
    if len(blob) != 12 + 4 * n * h:
        raise ValueError(f"{path}: truncated EMB1 payload")
    return np.frombuffer(blob, dtype="<f4", offset=12).reshape(n, h)
