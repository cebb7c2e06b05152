"""Minimal TSV/JSONL corpus reading for the exporter.

Same file contract as the downstream consumer: TSV rows are
``text<TAB>label`` with an optional ``text\\tlabel`` header; JSONL rows are
objects with string ``text`` and ``label`` fields. Only the texts matter
here, but rows are validated so the exported matrix stays aligned with the
corpus.
"""

import json
from pathlib import Path


class CorpusError(ValueError):
    """Raised for unreadable corpus rows; message carries the line number."""


def read_texts(path):
    """Return the text column of a TSV or JSONL corpus, order preserved."""
    path = Path(path)
    suffix = path.suffix.lower()
    lines = path.read_text(encoding="utf-8").splitlines()
    texts = []
    if suffix in (".jsonl", ".json"):
        for lineno, line in enumerate(lines, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc})") from exc
            text = obj.get("text") if isinstance(obj, dict) else None
            if not isinstance(text, str) or not text.strip():
                raise CorpusError(f"line {lineno}: missing string 'text' field")
            texts.append(text)
    else:
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if lineno == 1 and parts == ["text", "label"]:
                continue
            if len(parts) != 2:
                raise CorpusError(
                    f"line {lineno}: expected 2 tab-separated columns, "
                    f"got {len(parts)}"
                )
            if not parts[0].strip():
                raise CorpusError(f"line {lineno}: empty text")
            texts.append(parts[0])
    if not texts:
        raise CorpusError(f"{path}: corpus has no data rows")
    return texts
