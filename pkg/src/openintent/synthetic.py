"""Bundled synthetic open-world data so experiments need no downloads.

Known classes are isotropic Gaussian clusters centered on mutually orthogonal
directions (pairwise center distance separation * sqrt(2)). Open test samples
are a mixture of two uniform hyperboxes: a near box whose points brush
against the clusters and a wide far box of unambiguous outliers. They appear
only in the test set.
"""

from dataclasses import dataclass, field

import numpy as np

from .datasets import DEFAULT_OPEN_LABEL, LabelSpace, stratified_subsample_indices


@dataclass
class SyntheticConfig:
    num_known: int = 5
    input_dim: int = 16
    train_per_class: int = 150
    valid_per_class: int = 50
    test_per_class: int = 100
    open_test_size: int = 3000
    separation: float = 6.0
    cluster_std: float = 1.0
    open_near_extent: float = 0.6   # near-box half-width, in separation units
    open_far_extent: float = 2.5    # far-box half-width, in separation units
    open_far_fraction: float = 0.5

    def __post_init__(self):
        if self.num_known < 2:
            raise ValueError("need at least 2 known classes")
        if self.input_dim < self.num_known:
            raise ValueError("input_dim must be >= num_known for orthogonal centers")
        if not 0 <= self.open_far_fraction <= 1:
            raise ValueError("open_far_fraction must lie in [0, 1]")


@dataclass
class SyntheticData:
    x_train: np.ndarray
    y_train: np.ndarray  # known-class indices
    x_valid: np.ndarray
    y_valid: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray   # indices in [0, num_known]; num_known = open
    label_space: LabelSpace = field(default=None)

    @property
    def num_known(self):
        return self.label_space.num_known


def _cluster_centers(config, rng):
    gaussian = rng.standard_normal((config.input_dim, config.input_dim))
    q, _ = np.linalg.qr(gaussian)
    return config.separation * q[: config.num_known]


def _sample_classes(centers, per_class, std, rng):
    k, dim = centers.shape
    x = np.vstack([
        centers[c] + std * rng.standard_normal((per_class, dim))
        for c in range(k)
    ])
    y = np.repeat(np.arange(k), per_class)
    return x, y


def make_synthetic_data(config=None, seed=0, open_label=DEFAULT_OPEN_LABEL):
    """Generate one seeded open-world dataset of Gaussian clusters."""
    config = config or SyntheticConfig()
    rng = np.random.default_rng(seed)
    centers = _cluster_centers(config, rng)

    x_train, y_train = _sample_classes(centers, config.train_per_class,
                                       config.cluster_std, rng)
    x_valid, y_valid = _sample_classes(centers, config.valid_per_class,
                                       config.cluster_std, rng)
    x_test, y_test = _sample_classes(centers, config.test_per_class,
                                     config.cluster_std, rng)
    if config.open_test_size:
        n_far = int(config.open_test_size * config.open_far_fraction)
        n_near = config.open_test_size - n_far
        near = config.separation * config.open_near_extent
        far = config.separation * config.open_far_extent
        x_near = rng.uniform(-near, near, size=(n_near, config.input_dim))
        x_far = rng.uniform(-far, far, size=(n_far, config.input_dim))
        x_test = np.vstack([x_test, x_near, x_far])
        y_test = np.concatenate([
            y_test, np.full(config.open_test_size, config.num_known, dtype=np.int64)
        ])

    width = len(str(config.num_known - 1))
    labels = tuple(f"cluster_{k:0{width}d}" for k in range(config.num_known))
    return SyntheticData(
        x_train=x_train, y_train=y_train,
        x_valid=x_valid, y_valid=y_valid,
        x_test=x_test, y_test=y_test,
        label_space=LabelSpace(known_labels=labels, open_label=open_label),
    )


def subsample_labeled(data, labeled_ratio, seed):
    """Per-class subsample of the synthetic training set (floor, at least 1)."""
    if labeled_ratio >= 1.0:
        return data
    rng = np.random.default_rng(seed)
    keep = stratified_subsample_indices(data.y_train, labeled_ratio, rng)
    return SyntheticData(
        x_train=data.x_train[keep], y_train=data.y_train[keep],
        x_valid=data.x_valid, y_valid=data.y_valid,
        x_test=data.x_test, y_test=data.y_test,
        label_space=data.label_space,
    )
