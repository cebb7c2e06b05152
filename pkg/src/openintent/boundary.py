"""Adaptive decision boundary fitting on frozen features.

Each known class gets a spherical boundary around its centroid. The radius is
the Softplus of an unconstrained parameter, updated with Adam using the
closed-form gradient that balances samples inside and outside the ball.
Boundary fitting is post-processing: it never touches encoder or classifier
parameters.
"""

from dataclasses import dataclass

import numpy as np

from .representation import Centroids, DivergenceError
from .validation import check_feature_matrix, check_label_indices


def softplus(x):
    """log(1 + exp(x)) computed stably for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x > 0, x + np.log1p(np.exp(-np.abs(x))),
                   np.log1p(np.exp(np.minimum(x, 0.0))))
    return float(out) if out.ndim == 0 else out


def inverse_softplus(y):
    """Inverse of softplus, stable for both small and large radii."""
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0):
        raise ValueError("inverse_softplus requires positive inputs")
    # log(exp(y) - 1) = y + log(1 - exp(-y))
    out = y + np.log(-np.expm1(-y))
    return float(out) if out.ndim == 0 else out


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                   np.exp(np.minimum(x, 0.0)) / (1.0 + np.exp(np.minimum(x, 0.0))))
    return float(out) if out.ndim == 0 else out


@dataclass
class BoundarySet:
    """Raw boundary parameters plus the centroids they are anchored to.

    ``radius`` is always the stable Softplus of ``raw``, hence strictly
    positive.
    """

    raw: np.ndarray
    centroids: Centroids = None

    def __post_init__(self):
        self.raw = np.asarray(self.raw, dtype=np.float64).reshape(-1)

    @property
    def radius(self):
        return softplus(self.raw)

    @property
    def num_classes(self):
        return self.raw.shape[0]

    def copy(self):
        return BoundarySet(self.raw.copy(), self.centroids)


@dataclass
class BoundaryTrainConfig:
    learning_rate: float = 0.05
    max_epochs: int = 200
    tolerance: float = 1e-4
    stable_epochs: int = 3
    batch_size: int = 128
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


class AdamOptimizer:
    """Adam over a small parameter vector with per-entry step counters.

    Entries absent from a step's mask are skipped entirely (no moment decay,
    no update), matching the rule that only classes present in a mini-batch
    move their boundary parameter.
    """

    def __init__(self, size, learning_rate, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = np.zeros(size, dtype=np.int64)

    def step(self, params, grads, indices):
        indices = np.asarray(indices, dtype=np.int64)
        g = np.asarray(grads, dtype=np.float64)
        self.t[indices] += 1
        self.m[indices] = self.beta1 * self.m[indices] + (1 - self.beta1) * g
        self.v[indices] = self.beta2 * self.v[indices] + (1 - self.beta2) * g * g
        t = self.t[indices]
        m_hat = self.m[indices] / (1 - self.beta1 ** t)
        v_hat = self.v[indices] / (1 - self.beta2 ** t)
        params[indices] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


def init_boundaries(num_classes, seed, centroids=None):
    """Standard-normal raw parameters under the seeded generator."""
    if num_classes < 1:
        raise ValueError("need at least one class")
    rng = np.random.default_rng(seed)
    return BoundarySet(raw=rng.standard_normal(num_classes), centroids=centroids)


def _distances_to_own_centroid(z, labels, centroids):
    return np.linalg.norm(z - centroids.matrix[labels], axis=1)


def _require_centroids(boundaries):
    if boundaries.centroids is None:
        raise ValueError("boundary set is not anchored to centroids")


def boundary_loss(z, labels, boundaries):
    """Mean per-sample boundary loss.

    Samples outside their class ball contribute d - radius, samples inside
    contribute radius - d; the sum equals mean |d - radius|.
    """
    _require_centroids(boundaries)
    z = check_feature_matrix(z, name="z")
    labels = check_label_indices(labels, boundaries.num_classes, z.shape[0])
    d = _distances_to_own_centroid(z, labels, boundaries.centroids)
    radius = boundaries.radius[labels]
    outside = d > radius
    per_sample = np.where(outside, d - radius, radius - d)
    return float(np.mean(per_sample))


def boundary_gradient(z, labels, boundaries, class_index):
    """Closed-form gradient of the boundary loss for one class's raw parameter.

    Averaged over the class's samples in the batch: each inside sample
    contributes +1 (shrinking the ball), each outside sample -1 (growing it),
    scaled by the Softplus derivative sigmoid(raw). Callers must skip classes
    absent from the batch.
    """
    _require_centroids(boundaries)
    z = check_feature_matrix(z, name="z")
    labels = check_label_indices(labels, boundaries.num_classes, z.shape[0])
    mask = labels == class_index
    count = int(mask.sum())
    if count == 0:
        raise ValueError(f"class {class_index} has no samples in this batch")
    d = np.linalg.norm(z[mask] - boundaries.centroids.matrix[class_index], axis=1)
    radius = float(boundaries.radius[class_index])
    signs = np.where(d > radius, -1.0, 1.0)
    return float(signs.mean() * sigmoid(boundaries.raw[class_index]))


def _batch_gradients(d, labels, raw, radius, present):
    """boundary_gradient for every present class at once, from precomputed distances."""
    signs = np.where(d > radius[labels], -1.0, 1.0)
    sums = np.bincount(labels, weights=signs, minlength=raw.shape[0])
    counts = np.bincount(labels, minlength=raw.shape[0])
    return sums[present] / counts[present] * sigmoid(raw[present])


def fit_boundaries(z_train, labels, centroids, config=None):
    """Learn one radius per known class on frozen features with mini-batch Adam.

    Stops once the mean absolute radius change over an epoch stays below the
    tolerance for ``stable_epochs`` consecutive epochs, or at ``max_epochs``.
    """
    config = config or BoundaryTrainConfig()
    z_train = check_feature_matrix(z_train, dim=centroids.feature_dim, name="z_train")
    num_classes = centroids.num_classes
    labels = check_label_indices(labels, num_classes, z_train.shape[0])

    boundaries = init_boundaries(num_classes, config.seed, centroids=centroids)
    rng = np.random.default_rng(config.seed)
    optimizer = AdamOptimizer(num_classes, config.learning_rate,
                              config.beta1, config.beta2, config.epsilon)

    # features and centroids are frozen, so distances never change
    distances = _distances_to_own_centroid(z_train, labels, centroids)
    n = z_train.shape[0]
    batch_size = min(config.batch_size, n)
    calm_epochs = 0

    for _ in range(config.max_epochs):
        previous_radius = boundaries.radius
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            batch_labels = labels[batch]
            present = np.unique(batch_labels)
            grads = _batch_gradients(distances[batch], batch_labels,
                                     boundaries.raw, boundaries.radius, present)
            optimizer.step(boundaries.raw, grads, present)
            if not np.all(np.isfinite(boundaries.raw)):
                raise DivergenceError("non-finite boundary parameter")
        change = float(np.mean(np.abs(boundaries.radius - previous_radius)))
        calm_epochs = calm_epochs + 1 if change < config.tolerance else 0
        if calm_epochs >= config.stable_epochs:
            break
    return boundaries
