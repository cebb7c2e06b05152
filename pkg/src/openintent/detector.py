"""Scikit-learn style estimator for open intent detection."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from . import boundary as boundary_mod
from . import representation as rep
from .datasets import DEFAULT_OPEN_LABEL
from .encoder import featurize, forward_head
from .inference import classify_batch, classify_msp_batch
from .validation import check_feature_matrix

METHODS = ("da_adb", "adb", "msp")


class OpenIntentDetector(BaseEstimator, ClassifierMixin):
    """Open-world classifier that routes out-of-scope inputs to an open class.

    Pipeline: features (hashed bag-of-words over raw texts, or a precomputed
    matrix) -> trainable dense ReLU head -> classifier trained with softmax
    loss. For ``da_adb`` the classifier is cosine over distance-aware
    meta-embeddings; ``adb`` is the same with the distance coefficient pinned
    to 1; ``msp`` trains a plain affine softmax head. After representation
    training, ``da_adb``/``adb`` fit one spherical decision boundary per known
    class and reject samples outside every ball, while ``msp`` rejects
    low-confidence predictions.

    Parameters
    ----------
    method : {"da_adb", "adb", "msp"}
    encoder : {"bow", "passthrough"}
        "bow" expects raw texts (or objects with a ``text`` attribute) and
        hashes them; "passthrough" expects a numeric feature matrix.
    feature_dim : int
        Width of the learned representation.
    hash_dim, hash_seed : int
        Hashed bag-of-words table size and seed (encoder="bow" only).
    alpha : float
        Cosine classifier scale.
    rep_lr, batch_size, max_epochs, patience : training hyperparameters
        for the representation stage.
    boundary_lr, boundary_max_epochs, boundary_tol : boundary-stage Adam
        hyperparameters; ignored for ``msp``.
    msp_threshold : float
        Confidence threshold of the MSP rejection rule.
    open_label : str
        Label returned for rejected samples.
    seed : int
        Seeds initialization and batch order; fitting is deterministic.

    Attributes
    ----------
    classes_ : ndarray of known labels, lexicographically sorted.
    encoder_params_, classifier_, centroids_, boundaries_ : fitted pieces.
    """

    def __init__(self, method="da_adb", encoder="bow", feature_dim=64,
                 hash_dim=2048, hash_seed=0, alpha=4.0, rep_lr=0.05,
                 batch_size=128, max_epochs=100, patience=10,
                 boundary_lr=0.05, boundary_max_epochs=200, boundary_tol=1e-4,
                 msp_threshold=0.5, open_label=DEFAULT_OPEN_LABEL, seed=0):
        self.method = method
        self.encoder = encoder
        self.feature_dim = feature_dim
        self.hash_dim = hash_dim
        self.hash_seed = hash_seed
        self.alpha = alpha
        self.rep_lr = rep_lr
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.boundary_lr = boundary_lr
        self.boundary_max_epochs = boundary_max_epochs
        self.boundary_tol = boundary_tol
        self.msp_threshold = msp_threshold
        self.open_label = open_label
        self.seed = seed

    def _rep_config(self):
        return rep.RepTrainConfig(
            feature_dim=self.feature_dim,
            alpha=self.alpha,
            learning_rate=self.rep_lr,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.seed,
            distance_aware=self.method == "da_adb",
            classifier="linear" if self.method == "msp" else "cosine",
        )

    def _boundary_config(self):
        return boundary_mod.BoundaryTrainConfig(
            learning_rate=self.boundary_lr,
            max_epochs=self.boundary_max_epochs,
            tolerance=self.boundary_tol,
            batch_size=self.batch_size,
            seed=self.seed,
        )

    def _featurize(self, X):
        if self.encoder == "bow":
            return featurize(X, input_dim=self.hash_dim, hash_seed=self.hash_seed)
        if self.encoder == "passthrough":
            return check_feature_matrix(X, name="X")
        raise ValueError(f"unknown encoder {self.encoder!r}")

    def fit(self, X, y, X_valid=None, y_valid=None):
        """Fit representation (and boundaries) on known-class data only.

        Validation data, when given, drives snapshot selection and early
        stopping; without it, training accuracy is used.
        """
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] < 2:
            raise ValueError("need at least 2 known classes")
        if self.open_label in set(self.classes_.tolist()):
            raise ValueError(f"training labels collide with open label "
                             f"{self.open_label!r}")
        index_of = {label: i for i, label in enumerate(self.classes_.tolist())}
        y_idx = np.array([index_of[v] for v in y.tolist()], dtype=np.int64)

        x = self._featurize(X)
        xv = yv = None
        if X_valid is not None and len(X_valid) > 0:
            xv = self._featurize(X_valid)
            unknown = [v for v in np.asarray(y_valid).tolist() if v not in index_of]
            if unknown:
                raise ValueError(
                    f"validation labels {sorted(set(unknown))!r} never seen in training"
                )
            yv = np.array([index_of[v] for v in np.asarray(y_valid).tolist()],
                          dtype=np.int64)

        self.encoder_params_, self.classifier_, self.centroids_ = (
            rep.train_representation(
                x, y_idx, xv, yv,
                num_classes=self.classes_.shape[0],
                config=self._rep_config(),
            )
        )
        if self.method in ("da_adb", "adb"):
            z = forward_head(x, self.encoder_params_)
            self.boundaries_ = boundary_mod.fit_boundaries(
                z, y_idx, self.centroids_, self._boundary_config()
            )
        else:
            self.boundaries_ = None
        self.input_dim_ = x.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "classifier_"):
            raise NotFittedError(
                "This OpenIntentDetector instance is not fitted yet."
            )

    @property
    def num_known_(self):
        self._check_fitted()
        return self.classes_.shape[0]

    def transform(self, X):
        """Learned representation z for the given inputs."""
        self._check_fitted()
        return forward_head(self._featurize(X), self.encoder_params_)

    def predict_proba(self, X):
        """Softmax probabilities over the known classes."""
        self._check_fitted()
        z = self.transform(X)
        gamma = None
        if self.method == "da_adb":
            gamma = rep.gamma_coefficients(z, self.centroids_)
        return rep.softmax_probabilities(
            rep.model_logits(z, self.classifier_, gamma=gamma)
        )

    def predict_index(self, X):
        """Class indices in [0, K]; index K is the open class."""
        self._check_fitted()
        if self.method == "msp":
            return classify_msp_batch(self.predict_proba(X), self.msp_threshold)
        z = self.transform(X)
        return classify_batch(z, self.centroids_, self.boundaries_)

    def predict(self, X):
        """Known-class labels, or ``open_label`` for rejected samples."""
        indices = self.predict_index(X)
        labels = np.append(self.classes_.astype(object), self.open_label)
        return labels[indices]

    def label_to_index(self, labels):
        """Map label values (including the open label) to indices in [0, K]."""
        self._check_fitted()
        index_of = {label: i for i, label in enumerate(self.classes_.tolist())}
        index_of[self.open_label] = self.classes_.shape[0]
        return np.array([index_of[v] for v in np.asarray(labels).tolist()],
                        dtype=np.int64)

    def score(self, X, y):
        """Accuracy over known plus open labels."""
        return float(np.mean(self.predict(X) == np.asarray(y)))
