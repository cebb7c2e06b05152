"""Distance-aware representation learning.

Features pass through the dense ReLU head, are scaled by a per-sample
distance-aware coefficient into a meta-embedding, squashed, and scored by a
cosine classifier. Training descends the softmax loss with hand-derived
gradients; the coefficient and the class centroids are treated as constants
within each step.
"""

from dataclasses import dataclass, field

import numpy as np

from .encoder import EncoderParams, forward_head
from .validation import check_feature_matrix, check_label_indices

_REL_ERROR_FLOOR = 1e-6


class DivergenceError(RuntimeError):
    """Raised when training produces a non-finite loss or parameter."""


@dataclass
class Centroids:
    """Per-class mean vectors of embedded training examples."""

    matrix: np.ndarray        # (num_classes, feature_dim)
    class_counts: np.ndarray  # (num_classes,)

    @property
    def num_classes(self):
        return self.matrix.shape[0]

    @property
    def feature_dim(self):
        return self.matrix.shape[1]


@dataclass
class CosineClassifier:
    """Scaled cosine classifier over squashed meta-embeddings."""

    weights: np.ndarray  # (num_classes, feature_dim)
    alpha: float = 4.0

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def num_classes(self):
        return self.weights.shape[0]

    def copy(self):
        return CosineClassifier(self.weights.copy(), self.alpha)


@dataclass
class LinearClassifier:
    """Plain affine softmax head, used by the MSP baseline."""

    weights: np.ndarray  # (num_classes, feature_dim)
    bias: np.ndarray     # (num_classes,)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)

    @property
    def num_classes(self):
        return self.weights.shape[0]

    def copy(self):
        return LinearClassifier(self.weights.copy(), self.bias.copy())


@dataclass
class RepTrainConfig:
    feature_dim: int = 64
    alpha: float = 4.0
    learning_rate: float = 0.05
    batch_size: int = 128
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    distance_aware: bool = True
    classifier: str = "cosine"  # "cosine" or "linear"


def compute_centroids(z, labels, num_classes):
    """Exact per-class arithmetic means of the feature rows."""
    z = check_feature_matrix(z, name="z")
    labels = check_label_indices(labels, num_classes, z.shape[0])
    counts = np.bincount(labels, minlength=num_classes)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise ValueError(f"class {int(empty[0])} has no samples; centroid undefined")
    matrix = np.zeros((num_classes, z.shape[1]), dtype=np.float64)
    np.add.at(matrix, labels, z)
    matrix /= counts[:, None]
    return Centroids(matrix=matrix, class_counts=counts)


def centroid_distances(z, centroids):
    """Euclidean distances from each row of z to each centroid, shape (N, K)."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    c = centroids.matrix
    sq = (
        np.sum(z * z, axis=1)[:, None]
        - 2.0 * (z @ c.T)
        + np.sum(c * c, axis=1)[None, :]
    )
    return np.sqrt(np.maximum(sq, 0.0))


def nearest_two(z_i, centroids):
    """Indices and distances of the nearest and next-nearest centroids.

    Ties go to the lowest class index. Requires at least two classes.
    """
    if centroids.num_classes < 2:
        raise ValueError("nearest_two needs at least 2 centroids")
    d = np.linalg.norm(centroids.matrix - np.asarray(z_i, dtype=np.float64), axis=1)
    k_a = int(np.argmin(d))
    rest = d.copy()
    rest[k_a] = np.inf
    k_b = int(np.argmin(rest))
    return k_a, k_b, float(d[k_a]), float(d[k_b])


def nearest_two_batch(z, centroids):
    """Vectorized nearest/next-nearest scan; same tie-break as nearest_two."""
    if centroids.num_classes < 2:
        raise ValueError("nearest_two needs at least 2 centroids")
    d = centroid_distances(z, centroids)
    order = np.argsort(d, axis=1, kind="stable")
    k_a = order[:, 0]
    k_b = order[:, 1]
    rows = np.arange(d.shape[0])
    return k_a, k_b, d[rows, k_a], d[rows, k_b]


def distance_coefficient(d_a, d_b):
    """exp of the next-nearest/nearest distance gap; always >= 1."""
    d_a = np.asarray(d_a, dtype=np.float64)
    d_b = np.asarray(d_b, dtype=np.float64)
    if np.any(d_a > d_b):
        raise ValueError("distance_coefficient called with d_a > d_b")
    out = np.exp(d_b - d_a)
    return float(out) if out.ndim == 0 else out


def gamma_coefficients(z, centroids):
    """Per-sample distance-aware coefficients for a batch of features."""
    _, _, d_a, d_b = nearest_two_batch(z, centroids)
    return distance_coefficient(d_a, d_b)


def squash(v):
    """Rescale v to norm ||v||^2 / (1 + ||v||^2), preserving direction.

    Accepts a single vector or a stack of row vectors; zero maps to zero.
    """
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v * (n / (1.0 + n * n))


def _unit_rows(weights):
    norms = np.linalg.norm(weights, axis=1)
    if np.any(norms == 0):
        raise ValueError("cosine classifier has a zero-norm weight row")
    return weights / norms[:, None], norms


def logits(meta, clf: CosineClassifier):
    """Cosine-classifier logits alpha * squash(meta) . (w_k / ||w_k||)."""
    unit, _ = _unit_rows(clf.weights)
    return clf.alpha * (squash(meta) @ unit.T)


def linear_logits(z, clf: LinearClassifier):
    """Affine logits z @ W.T + b."""
    return np.asarray(z, dtype=np.float64) @ clf.weights.T + clf.bias


def model_logits(z, clf, gamma=None):
    """Logits for either classifier kind; gamma scales z on the cosine path."""
    if isinstance(clf, LinearClassifier):
        return linear_logits(z, clf)
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    if gamma is None:
        meta = z
    else:
        meta = np.asarray(gamma, dtype=np.float64)[:, None] * z
    return logits(meta, clf)


def softmax_probabilities(logit_rows):
    """Row-wise softmax with max subtraction for stability."""
    logit_rows = np.atleast_2d(np.asarray(logit_rows, dtype=np.float64))
    shifted = logit_rows - logit_rows.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_loss(logit_rows, labels):
    """Mean negative log softmax probability of the true class."""
    logit_rows = np.atleast_2d(np.asarray(logit_rows, dtype=np.float64))
    labels = check_label_indices(labels, logit_rows.shape[1], logit_rows.shape[0])
    shifted = logit_rows - logit_rows.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    true_logit = shifted[np.arange(shifted.shape[0]), labels]
    return float(np.mean(log_norm - true_logit))


def init_encoder_params(input_dim, feature_dim, rng):
    """Per-entry uniform init in [-1/sqrt(D), +1/sqrt(D)] for weights and bias."""
    bound = 1.0 / np.sqrt(feature_dim)
    weights = rng.uniform(-bound, bound, size=(input_dim, feature_dim))
    bias = rng.uniform(-bound, bound, size=feature_dim)
    return EncoderParams(weights=weights, bias=bias)


def init_classifier(num_classes, feature_dim, kind, alpha, rng):
    bound = 1.0 / np.sqrt(feature_dim)
    weights = rng.uniform(-bound, bound, size=(num_classes, feature_dim))
    if kind == "cosine":
        return CosineClassifier(weights=weights, alpha=alpha)
    if kind == "linear":
        bias = rng.uniform(-bound, bound, size=num_classes)
        return LinearClassifier(weights=weights, bias=bias)
    raise ValueError(f"unknown classifier kind {kind!r}")


def representation_loss(x, y, params, clf, gamma=None):
    """Softmax loss of the full pipeline with gamma held constant."""
    z = forward_head(x, params)
    return softmax_loss(model_logits(z, clf, gamma=gamma), y)


def loss_and_gradients(x, y, params, clf, gamma=None):
    """Forward pass plus hand-derived gradients of the softmax loss.

    Returns ``(loss, grads)`` where grads maps parameter names
    (``encoder_weights``, ``encoder_bias``, ``classifier_weights`` and, for
    the linear head, ``classifier_bias``) to arrays of matching shape. The
    distance-aware coefficients in ``gamma`` are constants: no gradient flows
    through them.
    """
    x = check_feature_matrix(x, dim=params.input_dim, name="x")
    n = x.shape[0]
    y = check_label_indices(y, clf.num_classes, n)

    pre = x @ params.weights + params.bias
    z = np.maximum(pre, 0.0)

    if isinstance(clf, LinearClassifier):
        logit_rows = z @ clf.weights.T + clf.bias
    else:
        if gamma is None:
            gamma = np.ones(n)
        gamma = np.asarray(gamma, dtype=np.float64)
        meta = gamma[:, None] * z
        norms = np.linalg.norm(meta, axis=1)
        g = norms / (1.0 + norms * norms)
        s = meta * g[:, None]
        unit, w_norms = _unit_rows(clf.weights)
        logit_rows = clf.alpha * (s @ unit.T)

    shifted = logit_rows - logit_rows.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(exp.sum(axis=1, keepdims=True))
    loss = float(-np.mean(log_probs[np.arange(n), y]))

    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n

    if isinstance(clf, LinearClassifier):
        d_clf_w = dlogits.T @ z
        d_clf_b = dlogits.sum(axis=0)
        dz = dlogits @ clf.weights
        grads = {"classifier_weights": d_clf_w, "classifier_bias": d_clf_b}
    else:
        ds = clf.alpha * (dlogits @ unit)
        d_unit = clf.alpha * (dlogits.T @ s)
        d_clf_w = (
            d_unit - np.sum(d_unit * unit, axis=1, keepdims=True) * unit
        ) / w_norms[:, None]
        # squash backward: s = m * g(n) with g(n) = n / (1 + n^2)
        g_prime = (1.0 - norms * norms) / (1.0 + norms * norms) ** 2
        dot = np.sum(meta * ds, axis=1)
        scale = np.zeros_like(norms)
        positive = norms > 0
        scale[positive] = g_prime[positive] / norms[positive] * dot[positive]
        dmeta = g[:, None] * ds + scale[:, None] * meta
        dz = gamma[:, None] * dmeta
        grads = {"classifier_weights": d_clf_w}

    dpre = dz * (pre > 0)
    grads["encoder_weights"] = x.T @ dpre
    grads["encoder_bias"] = dpre.sum(axis=0)
    return loss, grads


def _apply_sgd(params, clf, grads, lr):
    params.weights -= lr * grads["encoder_weights"]
    params.bias -= lr * grads["encoder_bias"]
    clf.weights -= lr * grads["classifier_weights"]
    if "classifier_bias" in grads:
        clf.bias -= lr * grads["classifier_bias"]


def classifier_accuracy(x, y, params, clf, centroids=None, distance_aware=False):
    """Known-class accuracy of the classifier argmax on a labeled set."""
    if len(x) == 0:
        return 0.0
    z = forward_head(x, params)
    gamma = None
    if distance_aware and isinstance(clf, CosineClassifier):
        gamma = gamma_coefficients(z, centroids)
    predictions = np.argmax(model_logits(z, clf, gamma=gamma), axis=1)
    return float(np.mean(predictions == np.asarray(y)))


def train_representation(x_train, y_train, x_valid=None, y_valid=None,
                         num_classes=None, config=None):
    """Fit the dense head and classifier with mini-batch gradient descent.

    Centroids are recomputed at every epoch start; distance-aware
    coefficients are recomputed per batch from the current features and
    treated as constants within the step. The parameter snapshot with the
    best validation known-class accuracy is returned, together with final
    centroids computed from the selected parameters over the full training
    set. With no validation data, selection falls back to training accuracy.
    """
    config = config or RepTrainConfig()
    x_train = check_feature_matrix(x_train, name="x_train")
    if num_classes is None:
        num_classes = int(np.max(y_train)) + 1
    if num_classes < 2:
        raise ValueError("representation training needs at least 2 known classes")
    y_train = check_label_indices(y_train, num_classes, x_train.shape[0])
    if x_valid is None or len(x_valid) == 0:
        x_valid, y_valid = x_train, y_train
    else:
        x_valid = check_feature_matrix(x_valid, name="x_valid")
        y_valid = check_label_indices(y_valid, num_classes, x_valid.shape[0])

    rng = np.random.default_rng(config.seed)
    params = init_encoder_params(x_train.shape[1], config.feature_dim, rng)
    clf = init_classifier(
        num_classes, config.feature_dim, config.classifier, config.alpha, rng
    )
    use_gamma = config.distance_aware and config.classifier == "cosine"

    n = x_train.shape[0]
    batch_size = min(config.batch_size, n)

    def snapshot():
        return params.copy(), clf.copy()

    centroids = compute_centroids(forward_head(x_train, params), y_train, num_classes)
    best_params, best_clf = snapshot()
    best_acc = classifier_accuracy(
        x_valid, y_valid, params, clf, centroids, distance_aware=use_gamma
    )
    stale_epochs = 0

    for epoch in range(1, config.max_epochs + 1):
        z_full = forward_head(x_train, params)
        centroids = compute_centroids(z_full, y_train, num_classes)
        order = rng.permutation(n)
        for step, start in enumerate(range(0, n, batch_size)):
            batch = order[start:start + batch_size]
            x_b, y_b = x_train[batch], y_train[batch]
            gamma = None
            if use_gamma:
                gamma = gamma_coefficients(forward_head(x_b, params), centroids)
            loss, grads = loss_and_gradients(x_b, y_b, params, clf, gamma=gamma)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite loss at epoch {epoch}, step {step}"
                )
            _apply_sgd(params, clf, grads, config.learning_rate)
        acc = classifier_accuracy(
            x_valid, y_valid, params, clf, centroids, distance_aware=use_gamma
        )
        if acc > best_acc:
            best_acc = acc
            best_params, best_clf = snapshot()
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs >= config.patience:
                break

    final_z = forward_head(x_train, best_params)
    final_centroids = compute_centroids(final_z, y_train, num_classes)
    return best_params, best_clf, final_centroids


@dataclass
class GradientCheckConfig:
    num_samples: int = 5
    num_classes: int = 3
    input_dim: int = 6
    feature_dim: int = 4
    classifier: str = "cosine"
    distance_aware: bool = True
    alpha: float = 4.0
    step: float = 1e-4
    seed: int = 0


@dataclass
class GradientCheckReport:
    max_relative_error: float
    per_parameter: dict = field(default_factory=dict)
    step: float = 1e-4

    def passed(self, threshold):
        return self.max_relative_error < threshold


def max_relative_error(analytic, numeric, floor=_REL_ERROR_FLOOR):
    """Largest elementwise |a - n| / max(|a|, |n|, floor)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def _check_instance(config):
    rng = np.random.default_rng(config.seed)
    n, k = config.num_samples, config.num_classes
    x = rng.standard_normal((n, config.input_dim))
    y = np.concatenate([np.arange(k), rng.integers(0, k, size=max(0, n - k))])[:n]
    params = init_encoder_params(config.input_dim, config.feature_dim, rng)
    clf = init_classifier(k, config.feature_dim, config.classifier,
                          config.alpha, rng)
    gamma = None
    if config.classifier == "cosine" and config.distance_aware:
        z = forward_head(x, params)
        centroids = compute_centroids(z, y, k)
        gamma = gamma_coefficients(z, centroids)
    return x, y, params, clf, gamma


def finite_difference_gradients(x, y, params, clf, gamma=None, step=1e-4):
    """Central-difference gradients of the fixed-gamma softmax loss."""
    tensors = {"encoder_weights": params.weights, "encoder_bias": params.bias,
               "classifier_weights": clf.weights}
    if isinstance(clf, LinearClassifier):
        tensors["classifier_bias"] = clf.bias
    numeric = {}
    for name, tensor in tensors.items():
        grad = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        grad_flat = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            up = representation_loss(x, y, params, clf, gamma=gamma)
            flat[i] = original - step
            down = representation_loss(x, y, params, clf, gamma=gamma)
            flat[i] = original
            grad_flat[i] = (up - down) / (2.0 * step)
        numeric[name] = grad
    return numeric


def gradient_check(config=None):
    """Compare analytic gradients against central differences on a toy instance."""
    config = config or GradientCheckConfig()
    x, y, params, clf, gamma = _check_instance(config)
    _, analytic = loss_and_gradients(x, y, params, clf, gamma=gamma)
    numeric = finite_difference_gradients(x, y, params, clf, gamma=gamma,
                                          step=config.step)
    per_parameter = {
        name: max_relative_error(analytic[name], numeric[name])
        for name in numeric
    }
    return GradientCheckReport(
        max_relative_error=max(per_parameter.values()),
        per_parameter=per_parameter,
        step=config.step,
    )
