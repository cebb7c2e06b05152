"""Binary serialization of fitted detectors (single-file DAADB1 artifact)."""

import json
import struct
from pathlib import Path

import numpy as np

from .boundary import BoundarySet
from .detector import OpenIntentDetector
from .encoder import EncoderParams
from .representation import Centroids, CosineClassifier, LinearClassifier

MODEL_MAGIC = b"DAADB1"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised for malformed model artifact files."""


def _array_bytes(a, dtype):
    return np.ascontiguousarray(a, dtype=dtype).tobytes()


def save_model(detector, path):
    """Write a fitted detector to a single binary artifact."""
    detector._check_fitted()
    header = {
        "format_version": FORMAT_VERSION,
        "params": detector.get_params(),
        "labels": [str(v) for v in detector.classes_.tolist()],
        "input_dim": int(detector.input_dim_),
        "feature_dim": int(detector.encoder_params_.feature_dim),
        "classifier_kind": (
            "linear" if isinstance(detector.classifier_, LinearClassifier)
            else "cosine"
        ),
        "has_boundaries": detector.boundaries_ is not None,
    }
    header_blob = json.dumps(header, sort_keys=True).encode("utf-8")

    chunks = [
        MODEL_MAGIC,
        struct.pack("<I", len(header_blob)),
        header_blob,
        _array_bytes(detector.encoder_params_.weights, "<f8"),
        _array_bytes(detector.encoder_params_.bias, "<f8"),
        _array_bytes(detector.classifier_.weights, "<f8"),
    ]
    if header["classifier_kind"] == "linear":
        chunks.append(_array_bytes(detector.classifier_.bias, "<f8"))
    chunks.append(_array_bytes(detector.centroids_.matrix, "<f8"))
    chunks.append(_array_bytes(detector.centroids_.class_counts, "<i8"))
    if header["has_boundaries"]:
        chunks.append(_array_bytes(detector.boundaries_.raw, "<f8"))
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, blob, path):
        self.blob = blob
        self.offset = 0
        self.path = path

    def take(self, count, what):
        if self.offset + count > len(self.blob):
            raise ModelFormatError(f"{self.path}: truncated while reading {what}")
        piece = self.blob[self.offset:self.offset + count]
        self.offset += count
        return piece

    def array(self, shape, what, dtype="<f8"):
        size = int(np.prod(shape)) * np.dtype(dtype).itemsize
        raw = self.take(size, what)
        return np.frombuffer(raw, dtype=dtype).reshape(shape).copy()


def load_model(path):
    """Reload a detector artifact written by :func:`save_model`."""
    path = Path(path)
    reader = _Reader(path.read_bytes(), path)
    magic = reader.take(len(MODEL_MAGIC), "magic")
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: bad magic {magic!r}, expected 'DAADB1'")
    (header_len,) = struct.unpack("<I", reader.take(4, "header length"))
    try:
        header = json.loads(reader.take(header_len, "header").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: unreadable header ({exc})") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported format version {header.get('format_version')}"
        )

    detector = OpenIntentDetector(**header["params"])
    num_known = len(header["labels"])
    input_dim = header["input_dim"]
    feature_dim = header["feature_dim"]

    weights = reader.array((input_dim, feature_dim), "encoder weights")
    bias = reader.array((feature_dim,), "encoder bias")
    clf_weights = reader.array((num_known, feature_dim), "classifier weights")
    if header["classifier_kind"] == "linear":
        clf_bias = reader.array((num_known,), "classifier bias")
        classifier = LinearClassifier(weights=clf_weights, bias=clf_bias)
    else:
        classifier = CosineClassifier(weights=clf_weights,
                                      alpha=detector.alpha)
    centroid_matrix = reader.array((num_known, feature_dim), "centroids")
    counts = reader.array((num_known,), "class counts", dtype="<i8")
    centroids = Centroids(matrix=centroid_matrix, class_counts=counts)
    boundaries = None
    if header["has_boundaries"]:
        raw = reader.array((num_known,), "boundary parameters")
        boundaries = BoundarySet(raw=raw, centroids=centroids)
    if reader.offset != len(reader.blob):
        raise ModelFormatError(f"{path}: {len(reader.blob) - reader.offset} "
                               "trailing bytes")

    detector.classes_ = np.array(header["labels"])
    detector.encoder_params_ = EncoderParams(weights=weights, bias=bias)
    detector.classifier_ = classifier
    detector.centroids_ = centroids
    detector.boundaries_ = boundaries
    detector.input_dim_ = input_dim
    return detector
