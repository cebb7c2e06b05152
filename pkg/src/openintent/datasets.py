"""Corpus loading and open-world split construction.

A corpus is a list of :class:`Utterance` rows. An open-world split keeps a
seeded subset of the label set as "known" classes, restricts training and
validation to those classes, and relabels every held-out test row to a single
reserved open label.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_OPEN_LABEL = "<open>"


class CorpusParseError(ValueError):
    """Raised when a corpus file cannot be parsed; message carries the line number."""


@dataclass(frozen=True)
class Utterance:
    text: str
    label: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("utterance text is empty")
        if not self.label:
            raise ValueError("utterance label is empty")


@dataclass(frozen=True)
class LabelSpace:
    """Ordered known labels plus the reserved open sentinel.

    ``known_labels`` order is deterministic (lexicographic); the open class is
    addressed by index ``num_known`` everywhere downstream.
    """

    known_labels: tuple
    open_label: str = DEFAULT_OPEN_LABEL

    def __post_init__(self):
        if len(self.known_labels) < 1:
            raise ValueError("label space needs at least one known label")
        if len(set(self.known_labels)) != len(self.known_labels):
            raise ValueError("known labels contain duplicates")
        if self.open_label in self.known_labels:
            raise ValueError(
                f"open label {self.open_label!r} collides with a known label"
            )

    @property
    def num_known(self):
        return len(self.known_labels)

    def index_of(self, label):
        """Class index of a label; the open label maps to ``num_known``."""
        if label == self.open_label:
            return self.num_known
        return self.known_labels.index(label)


@dataclass(frozen=True)
class OpenWorldSplit:
    """Train/valid/test partitions after known-class filtering and relabeling.

    The ``*_indices`` tuples give each kept row's position in the source
    partition, so precomputed feature files stay aligned.
    """

    train: tuple
    valid: tuple
    test: tuple
    label_space: LabelSpace
    seed: int
    known_ratio: float
    labeled_ratio: float
    train_indices: tuple = field(default=())
    valid_indices: tuple = field(default=())
    test_indices: tuple = field(default=())

    def labels_as_indices(self, subset):
        """Integer class indices for one subset ('train', 'valid' or 'test')."""
        rows = getattr(self, subset)
        return np.array(
            [self.label_space.index_of(u.label) for u in rows], dtype=np.int64
        )


def _parse_tsv(lines):
    rows = []
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n").rstrip("\r")
        if not line:
            continue
        parts = line.split("\t")
        if lineno == 1 and parts == ["text", "label"]:
            continue  # optional header
        if len(parts) != 2:
            raise CorpusParseError(
                f"line {lineno}: expected 2 tab-separated columns, got {len(parts)}"
            )
        text, label = parts
        try:
            rows.append(Utterance(text=text, label=label))
        except ValueError as exc:
            raise CorpusParseError(f"line {lineno}: {exc}") from exc
    return rows


def _parse_jsonl(lines):
    rows = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusParseError(f"line {lineno}: invalid JSON ({exc})") from exc
        if not isinstance(obj, dict):
            raise CorpusParseError(f"line {lineno}: expected a JSON object")
        text = obj.get("text")
        label = obj.get("label")
        if not isinstance(text, str) or not isinstance(label, str):
            raise CorpusParseError(
                f"line {lineno}: object needs string fields 'text' and 'label'"
            )
        try:
            rows.append(Utterance(text=text, label=label))
        except ValueError as exc:
            raise CorpusParseError(f"line {lineno}: {exc}") from exc
    return rows


def load_corpus(path, format="tsv"):
    """Load a labeled corpus file, preserving row order.

    ``format`` is ``"tsv"`` (two columns, optional ``text\\tlabel`` header) or
    ``"jsonl"`` (one object per line with string ``text`` and ``label``).
    """
    path = Path(path)
    if format not in ("tsv", "jsonl"):
        raise ValueError(f"unknown corpus format {format!r}")
    with path.open("r", encoding="utf-8") as handle:
        lines = handle.readlines()
    rows = _parse_tsv(lines) if format == "tsv" else _parse_jsonl(lines)
    if not rows:
        raise CorpusParseError(f"{path}: corpus has no data rows")
    return rows


def infer_corpus_format(path):
    """Guess tsv/jsonl from the file suffix."""
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".json"):
        return "jsonl"
    return "tsv"


def round_half_up(x):
    return int(math.floor(x + 0.5))


def select_known_classes(all_labels, known_ratio, seed, open_label=DEFAULT_OPEN_LABEL):
    """Pick a seeded uniform sample of classes to treat as known.

    K = round-half-up of ``known_ratio * |all_labels|``, clamped to >= 1. The
    returned label order is lexicographic over the selected names, so the same
    (labels, ratio, seed) always yields the same LabelSpace.
    """
    labels = sorted(set(all_labels))
    if len(labels) < 2:
        raise ValueError("need at least 2 distinct labels to select from")
    if not 0 < known_ratio <= 1:
        raise ValueError(f"known_ratio must be in (0, 1], got {known_ratio}")
    k = max(1, round_half_up(known_ratio * len(labels)))
    k = min(k, len(labels))
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(labels), size=k, replace=False)
    known = tuple(sorted(labels[i] for i in chosen))
    return LabelSpace(known_labels=known, open_label=open_label)


def stratified_subsample_indices(labels, ratio, rng):
    """Per-class subsample keeping floor(ratio * n_c) rows, at least 1 per class.

    Returns sorted positions into ``labels``; selection is uniform within each
    class under ``rng``.
    """
    if not 0 < ratio <= 1:
        raise ValueError(f"labeled ratio must be in (0, 1], got {ratio}")
    labels = np.asarray(labels)
    keep = []
    for value in sorted(set(labels.tolist())):
        positions = np.flatnonzero(labels == value)
        n_keep = max(1, int(math.floor(ratio * positions.size)))
        if n_keep >= positions.size:
            keep.extend(positions.tolist())
        else:
            chosen = rng.choice(positions.size, size=n_keep, replace=False)
            keep.extend(positions[chosen].tolist())
    return sorted(keep)


def make_open_world_split(train, valid, test, space, labeled_ratio, seed,
                          known_ratio=None):
    """Build the open-world split for one experiment run.

    Train and validation keep only known-label rows (held-out classes are
    dropped entirely); train is further subsampled per class to
    ``labeled_ratio``. Test keeps every row, with held-out labels rewritten to
    the open sentinel. ``known_ratio`` is recorded on the split; when omitted
    it is derived from the distinct labels observed across the inputs.
    """
    if not 0 < labeled_ratio <= 1:
        raise ValueError(f"labeled ratio must be in (0, 1], got {labeled_ratio}")
    known = set(space.known_labels)
    if known_ratio is None:
        all_labels = {u.label for rows in (train, valid, test) for u in rows}
        known_ratio = len(known) / max(1, len(all_labels))

    train_positions = [i for i, u in enumerate(train) if u.label in known]
    seen_train_labels = {train[i].label for i in train_positions}
    missing = sorted(known - seen_train_labels)
    if missing:
        raise ValueError(
            f"known class(es) {missing} have no training rows; centroids undefined"
        )

    if labeled_ratio < 1.0:
        rng = np.random.default_rng(seed)
        sub_labels = [train[i].label for i in train_positions]
        kept = stratified_subsample_indices(sub_labels, labeled_ratio, rng)
        train_positions = [train_positions[i] for i in kept]

    valid_positions = [i for i, u in enumerate(valid) if u.label in known]

    test_rows = []
    for u in test:
        if u.label in known:
            test_rows.append(u)
        else:
            test_rows.append(Utterance(text=u.text, label=space.open_label))

    return OpenWorldSplit(
        train=tuple(train[i] for i in train_positions),
        valid=tuple(valid[i] for i in valid_positions),
        test=tuple(test_rows),
        label_space=space,
        seed=seed,
        known_ratio=float(known_ratio),
        labeled_ratio=labeled_ratio,
        train_indices=tuple(train_positions),
        valid_indices=tuple(valid_positions),
        test_indices=tuple(range(len(test))),
    )
