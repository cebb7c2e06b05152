"""Open-world evaluation metrics.

The headline F1 scores are harmonic means of macro-averaged precision and
recall (over all K+1 classes, over the K known classes, and for the open
class alone). That differs from the common mean of per-class F1 scores, which
is also computed and exposed as a diagnostic so results can be compared
against external tooling.
"""

import json
from dataclasses import dataclass, field

import numpy as np

SCALAR_FIELDS = ("acc", "f1_all", "f1_known", "f1_open", "f1_mean_per_class")


@dataclass
class MetricsReport:
    acc: float
    f1_all: float
    f1_known: float
    f1_open: float
    f1_mean_per_class: float
    per_class: list = field(default_factory=list)  # (precision, recall, f1) rows
    confusion: np.ndarray = None                   # (K+1, K+1) counts
    num_known: int = 0

    def scalars(self):
        return {name: getattr(self, name) for name in SCALAR_FIELDS}

    def to_dict(self):
        return {
            **self.scalars(),
            "num_known": self.num_known,
            "per_class": [list(row) for row in self.per_class],
            "confusion": self.confusion.tolist(),
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _harmonic(p, r):
    if p + r == 0:
        return 0.0
    return 2.0 * p * r / (p + r)


def evaluate(y_true, y_pred, num_known):
    """Compute accuracy and macro F1 scores over K known classes plus open.

    Class indices must lie in [0, num_known]; index ``num_known`` is the open
    class, which is scored even when it never occurs (precision and recall
    default to 0 on zero division).
    """
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ValueError(
            f"y_true {y_true.shape} and y_pred {y_pred.shape} must be equal-length 1-D"
        )
    if y_true.size == 0:
        raise ValueError("cannot evaluate empty inputs")
    total = num_known + 1
    for name, arr in (("y_true", y_true), ("y_pred", y_pred)):
        if arr.min() < 0 or arr.max() >= total:
            raise ValueError(f"{name} has indices outside [0, {num_known}]")

    confusion = np.zeros((total, total), dtype=np.int64)
    np.add.at(confusion, (y_true, y_pred), 1)

    tp = np.diag(confusion).astype(np.float64)
    fp = confusion.sum(axis=0) - tp
    fn = confusion.sum(axis=1) - tp
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(tp + fp > 0, tp / (tp + fp), 0.0)
        recall = np.where(tp + fn > 0, tp / (tp + fn), 0.0)
    per_class_f1 = np.array([_harmonic(p, r) for p, r in zip(precision, recall)])

    macro_p = float(precision.mean())
    macro_r = float(recall.mean())
    known_p = float(precision[:num_known].mean())
    known_r = float(recall[:num_known].mean())

    return MetricsReport(
        acc=float(tp.sum() / y_true.size),
        f1_all=_harmonic(macro_p, macro_r),
        f1_known=_harmonic(known_p, known_r),
        f1_open=_harmonic(float(precision[num_known]), float(recall[num_known])),
        f1_mean_per_class=float(per_class_f1.mean()),
        per_class=[
            (float(p), float(r), float(f))
            for p, r, f in zip(precision, recall, per_class_f1)
        ],
        confusion=confusion,
        num_known=num_known,
    )


def aggregate_runs(reports):
    """Elementwise mean and sample standard deviation of the scalar fields."""
    if not reports:
        raise ValueError("need at least one report to aggregate")
    out = {}
    for name in SCALAR_FIELDS:
        values = np.array([getattr(r, name) for r in reports], dtype=np.float64)
        std = float(values.std(ddof=1)) if values.size > 1 else 0.0
        out[name] = {"mean": float(values.mean()), "std": std}
    return out


def format_report(report, class_names=None):
    """Aligned-column text rendering of one report."""
    lines = [
        f"{'metric':<20}{'value':>10}",
        f"{'ACC':<20}{report.acc:>10.4f}",
        f"{'F1 (all)':<20}{report.f1_all:>10.4f}",
        f"{'F1 (known)':<20}{report.f1_known:>10.4f}",
        f"{'F1 (open)':<20}{report.f1_open:>10.4f}",
    ]
    if class_names:
        lines.append("")
        lines.append(f"{'class':<24}{'prec':>8}{'recall':>8}{'f1':>8}")
        for name, (p, r, f) in zip(class_names, report.per_class):
            lines.append(f"{name:<24}{p:>8.4f}{r:>8.4f}{f:>8.4f}")
    return "\n".join(lines)
