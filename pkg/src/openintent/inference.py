"""Open classification with learned boundaries, plus the MSP decision rule.

Predicted class indices live in [0, K] where index K stands for the open
class.
"""

from dataclasses import dataclass

import numpy as np

from .boundary import BoundarySet, inverse_softplus
from .validation import (
    check_feature_matrix,
    check_positive,
    check_probability_vector,
)


@dataclass(frozen=True)
class Prediction:
    """One classified sample: open iff distance exceeds the nearest radius."""

    class_index: int     # in [0, num_known]; num_known means open
    nearest_known: int   # in [0, num_known)
    distance: float
    radius_used: float


def classify(z_i, centroids, boundaries):
    """Assign the nearest centroid's class, or open when outside its ball.

    Membership is boundary-inclusive: distance == radius stays known. Ties
    between centroids go to the lowest class index.
    """
    d = np.linalg.norm(centroids.matrix - np.asarray(z_i, dtype=np.float64), axis=1)
    nearest = int(np.argmin(d))
    distance = float(d[nearest])
    radius = float(boundaries.radius[nearest])
    is_open = distance > radius
    return Prediction(
        class_index=centroids.num_classes if is_open else nearest,
        nearest_known=nearest,
        distance=distance,
        radius_used=radius,
    )


def classify_batch(z, centroids, boundaries, chunk_size=256):
    """Vectorized classify over feature rows; returns predicted class indices.

    Distances are computed chunk by chunk with the same exact formula as
    :func:`classify`, so results match the per-row operation.
    """
    z = check_feature_matrix(z, dim=centroids.feature_dim, name="z")
    radius = boundaries.radius
    out = np.empty(z.shape[0], dtype=np.int64)
    for start in range(0, z.shape[0], chunk_size):
        block = z[start:start + chunk_size]
        d = np.linalg.norm(block[:, None, :] - centroids.matrix[None, :, :], axis=2)
        nearest = np.argmin(d, axis=1)
        rows = np.arange(block.shape[0])
        is_open = d[rows, nearest] > radius[nearest]
        out[start:start + block.shape[0]] = np.where(
            is_open, centroids.num_classes, nearest
        )
    return out


def classify_msp(probabilities, threshold=0.5):
    """Maximum-softmax-probability rule: open iff the max is below threshold."""
    probabilities = check_probability_vector(probabilities)
    best = int(np.argmax(probabilities))
    if probabilities[best] < threshold:
        return probabilities.shape[0]
    return best


def classify_msp_batch(probability_rows, threshold=0.5):
    """Row-wise MSP rule over a matrix of probability vectors."""
    probability_rows = np.atleast_2d(np.asarray(probability_rows, dtype=np.float64))
    for row in probability_rows:
        check_probability_vector(row)
    best = np.argmax(probability_rows, axis=1)
    confident = probability_rows[np.arange(len(best)), best] >= threshold
    return np.where(confident, best, probability_rows.shape[1]).astype(np.int64)


def scale_radii(boundaries, factor):
    """New boundary set with every radius multiplied by a positive factor."""
    check_positive(factor, "factor")
    scaled = boundaries.radius * factor
    return BoundarySet(raw=inverse_softplus(scaled), centroids=boundaries.centroids)
