"""Shared brute-force oracles kept independent of the library code paths."""

import numpy as np


def brute_force_confusion(y_true, y_pred, num_classes):
    """Plain-loop confusion counts: rows true class, columns predicted."""
    counts = [[0] * num_classes for _ in range(num_classes)]
    for t, p in zip(y_true, y_pred):
        counts[int(t)][int(p)] += 1
    return counts


def brute_force_metrics(y_true, y_pred, num_known):
    """Loop-based evaluation of accuracy and the macro F1 variants."""
    total = num_known + 1
    counts = brute_force_confusion(y_true, y_pred, total)
    n = len(y_true)
    correct = sum(counts[c][c] for c in range(total))

    precision, recall, f1 = [], [], []
    for c in range(total):
        tp = counts[c][c]
        fp = sum(counts[t][c] for t in range(total)) - tp
        fn = sum(counts[c][p] for p in range(total)) - tp
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        precision.append(p)
        recall.append(r)
        f1.append(2 * p * r / (p + r) if p + r else 0.0)

    def harmonic(p, r):
        return 2 * p * r / (p + r) if p + r else 0.0

    macro_p = sum(precision) / total
    macro_r = sum(recall) / total
    known_p = sum(precision[:num_known]) / num_known
    known_r = sum(recall[:num_known]) / num_known
    return {
        "acc": correct / n,
        "f1_all": harmonic(macro_p, macro_r),
        "f1_known": harmonic(known_p, known_r),
        "f1_open": harmonic(precision[num_known], recall[num_known]),
        "f1_mean_per_class": sum(f1) / total,
        "confusion": counts,
        "precision": precision,
        "recall": recall,
        "f1": f1,
    }


def naive_matmul(x, w):
    """Triple-loop matrix product used as the dense-head oracle."""
    n, h = x.shape
    h2, d = w.shape
    assert h == h2
    out = np.zeros((n, d))
    for i in range(n):
        for j in range(d):
            acc = 0.0
            for k in range(h):
                acc += x[i, k] * w[k, j]
            out[i, j] = acc
    return out


def separated_gaussians(num_classes, per_class, dim, distance, std, seed):
    """Gaussian clusters on scaled axes with pairwise center gap >= distance."""
    rng = np.random.default_rng(seed)
    centers = np.zeros((num_classes, dim))
    for k in range(num_classes):
        centers[k, k] = distance
    x = np.vstack([
        centers[k] + std * rng.standard_normal((per_class, dim))
        for k in range(num_classes)
    ])
    y = np.repeat(np.arange(num_classes), per_class)
    return x, y, centers
