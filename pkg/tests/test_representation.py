import math

import numpy as np
import pytest

from conftest import separated_gaussians
from openintent.encoder import EncoderParams, forward_head
from openintent.representation import (
    Centroids,
    CosineClassifier,
    GradientCheckConfig,
    RepTrainConfig,
    classifier_accuracy,
    compute_centroids,
    distance_coefficient,
    finite_difference_gradients,
    gamma_coefficients,
    gradient_check,
    init_classifier,
    init_encoder_params,
    logits,
    loss_and_gradients,
    max_relative_error,
    nearest_two,
    nearest_two_batch,
    representation_loss,
    softmax_loss,
    squash,
    train_representation,
)


class TestComputeCentroids:
    def test_singletons_equal_samples(self):
        z = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
        c = compute_centroids(z, [0, 1, 2], 3)
        assert np.array_equal(c.matrix, z)
        assert np.array_equal(c.class_counts, [1, 1, 1])

    def test_two_point_mean(self):
        z = np.array([[0.0, 0.0], [2.0, 4.0]])
        c = compute_centroids(z, [0, 0], 1)
        assert np.array_equal(c.matrix, [[1.0, 2.0]])

    def test_matches_accumulation_oracle(self):
        rng = np.random.default_rng(12)
        z = rng.standard_normal((50, 8))
        y = rng.integers(0, 5, 50)
        y[:5] = np.arange(5)  # every class populated
        c = compute_centroids(z, y, 5)
        for k in range(5):
            total = np.zeros(8)
            count = 0
            for row, label in zip(z, y):
                if label == k:
                    total += row
                    count += 1
            assert np.max(np.abs(c.matrix[k] - total / count)) < 1e-6
            assert c.class_counts[k] == count

    def test_empty_class_error_names_class(self):
        z = np.ones((2, 3))
        with pytest.raises(ValueError, match="class 1"):
            compute_centroids(z, [0, 2], 3)


class TestNearestTwo:
    def centroids(self, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        return Centroids(matrix=matrix, class_counts=np.ones(len(matrix), int))

    def test_exact_centroid_hit(self):
        c = self.centroids([[0.0, 0.0], [3.0, 0.0], [0.0, 5.0]])
        k_a, k_b, d_a, d_b = nearest_two([0.0, 0.0], c)
        assert (k_a, d_a) == (0, 0.0)
        assert k_b == 1 and d_b == 3.0

    def test_tie_breaks_to_lower_index(self):
        c = self.centroids([[1.0, 0.0], [-1.0, 0.0], [5.0, 0.0]])
        k_a, k_b, d_a, d_b = nearest_two([0.0, 0.0], c)
        assert (k_a, k_b) == (0, 1)
        assert d_a == d_b == 1.0

    def test_matches_exhaustive_scan(self):
        rng = np.random.default_rng(4)
        matrix = rng.standard_normal((7, 5))
        c = self.centroids(matrix)
        for _ in range(50):
            z = rng.standard_normal(5)
            k_a, k_b, d_a, d_b = nearest_two(z, c)
            dists = sorted(
                (float(np.linalg.norm(z - matrix[k])), k) for k in range(7)
            )
            assert (dists[0][1], dists[1][1]) == (k_a, k_b)
            assert d_a == pytest.approx(dists[0][0])
            assert d_b == pytest.approx(dists[1][0])
            assert d_a <= d_b

    def test_batch_agrees_with_scalar(self):
        rng = np.random.default_rng(9)
        matrix = rng.standard_normal((6, 4))
        c = self.centroids(matrix)
        z = rng.standard_normal((40, 4))
        k_a, k_b, d_a, d_b = nearest_two_batch(z, c)
        for i in range(40):
            ka, kb, da, db = nearest_two(z[i], c)
            assert (k_a[i], k_b[i]) == (ka, kb)
            assert d_a[i] == pytest.approx(da, abs=1e-9)
            assert d_b[i] == pytest.approx(db, abs=1e-9)

    def test_needs_two_classes(self):
        c = self.centroids([[0.0, 0.0]])
        with pytest.raises(ValueError):
            nearest_two([1.0, 1.0], c)


class TestDistanceCoefficient:
    def test_equal_distances_give_one(self):
        assert distance_coefficient(1.7, 1.7) == 1.0

    def test_unit_gap_gives_e(self):
        assert distance_coefficient(1.0, 2.0) == pytest.approx(math.e, abs=1e-12)

    def test_log3_gap_gives_three(self):
        assert distance_coefficient(0.5, 0.5 + math.log(3)) == pytest.approx(
            3.0, abs=1e-12
        )

    def test_contract_violation_rejected(self):
        with pytest.raises(ValueError):
            distance_coefficient(2.0, 1.0)

    def test_gamma_at_least_one_on_random_batches(self):
        rng = np.random.default_rng(2)
        z = rng.standard_normal((100, 6))
        y = rng.integers(0, 4, 100)
        y[:4] = np.arange(4)
        c = compute_centroids(z, y, 4)
        gamma = gamma_coefficients(z, c)
        assert np.all(gamma >= 1.0)


class TestSquash:
    def test_unit_norm_maps_to_half(self):
        v = np.array([1.0, 0.0, 0.0])
        assert np.linalg.norm(squash(v)) == pytest.approx(0.5, abs=1e-12)

    def test_norm_three_maps_to_point_nine(self):
        v = np.array([3.0, 0.0])
        assert np.linalg.norm(squash(v)) == pytest.approx(0.9, abs=1e-12)

    def test_zero_is_fixed_point(self):
        assert np.array_equal(squash(np.zeros(4)), np.zeros(4))

    def test_direction_preserved(self):
        rng = np.random.default_rng(8)
        v = rng.standard_normal(6)
        s = squash(v)
        cos = s @ v / (np.linalg.norm(s) * np.linalg.norm(v))
        assert cos == pytest.approx(1.0, abs=1e-12)

    def test_norm_below_one_and_increasing(self):
        norms = np.linspace(0.1, 50, 200)
        out = np.array([
            np.linalg.norm(squash(np.array([n, 0.0]))) for n in norms
        ])
        assert np.all(out < 1.0)
        assert np.all(np.diff(out) > 0)

    def test_rows_handled_like_vectors(self):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((5, 3))
        rows = squash(m)
        for i in range(5):
            assert np.allclose(rows[i], squash(m[i]))


class TestLogits:
    def test_parallel_unit_meta_scores_half_alpha(self):
        clf = CosineClassifier(weights=np.array([[2.0, 0.0]]), alpha=4.0)
        out = logits(np.array([1.0, 0.0]), clf)
        assert out[0] == pytest.approx(2.0, abs=1e-12)

    def test_orthogonal_meta_scores_zero(self):
        clf = CosineClassifier(weights=np.array([[0.0, 1.0]]), alpha=4.0)
        out = logits(np.array([1.0, 0.0]), clf)
        assert out[0] == pytest.approx(0.0, abs=1e-12)

    def test_weight_rescaling_invariance(self):
        rng = np.random.default_rng(3)
        w = rng.standard_normal((4, 6))
        meta = rng.standard_normal(6)
        base = logits(meta, CosineClassifier(weights=w, alpha=4.0))
        scaled_w = w.copy()
        scaled_w[2] *= 10.0
        scaled = logits(meta, CosineClassifier(weights=scaled_w, alpha=4.0))
        assert np.allclose(base, scaled, atol=1e-12)

    def test_argmax_invariant_to_alpha(self):
        rng = np.random.default_rng(7)
        w = rng.standard_normal((5, 6))
        meta = rng.standard_normal((20, 6))
        picks = [
            np.argmax(logits(meta, CosineClassifier(weights=w, alpha=a)), axis=1)
            for a in (2.0, 4.0, 64.0)
        ]
        assert np.array_equal(picks[0], picks[1])
        assert np.array_equal(picks[0], picks[2])

    def test_zero_norm_weight_rejected(self):
        clf = CosineClassifier(weights=np.array([[0.0, 0.0], [1.0, 0.0]]))
        with pytest.raises(ValueError, match="zero-norm"):
            logits(np.array([1.0, 0.0]), clf)


class TestSoftmaxLoss:
    def test_uniform_logits_give_log_k(self):
        loss = softmax_loss(np.zeros((3, 4)), [0, 1, 2])
        assert loss == pytest.approx(math.log(4), abs=1e-9)

    def test_confident_true_class_drives_loss_to_zero(self):
        row = np.array([[50.0, 0.0, 0.0]])
        assert softmax_loss(row, [0]) < 1e-9

    def test_matches_direct_summation_oracle(self):
        rng = np.random.default_rng(5)
        rows = rng.standard_normal((6, 3))
        y = rng.integers(0, 3, 6)
        total = 0.0
        for row, label in zip(rows, y):
            total += -math.log(
                math.exp(row[label]) / sum(math.exp(v) for v in row)
            )
        assert softmax_loss(rows, y) == pytest.approx(total / 6, abs=1e-8)

    def test_extreme_logits_stay_finite(self):
        rows = np.array([[1000.0, -1000.0, 0.0]])
        assert np.isfinite(softmax_loss(rows, [1]))


class TestGradients:
    def test_full_pipeline_matches_finite_differences(self):
        report = gradient_check(GradientCheckConfig())
        assert report.max_relative_error < 1e-3

    def test_linear_path_matches_to_machine_precision(self):
        report = gradient_check(
            GradientCheckConfig(classifier="linear", distance_aware=False)
        )
        assert report.max_relative_error < 1e-6

    def test_gamma_free_cosine_path(self):
        report = gradient_check(GradientCheckConfig(distance_aware=False))
        assert report.max_relative_error < 1e-3

    def test_corrupted_gradient_detected(self):
        config = GradientCheckConfig()
        from openintent.representation import _check_instance

        x, y, params, clf, gamma = _check_instance(config)
        _, analytic = loss_and_gradients(x, y, params, clf, gamma=gamma)
        numeric = finite_difference_gradients(x, y, params, clf, gamma=gamma)
        analytic["encoder_weights"].flat[0] += 0.1
        err = max(
            max_relative_error(analytic[name], numeric[name]) for name in numeric
        )
        assert err > 1e-3

    def test_one_small_step_does_not_increase_loss(self):
        rng = np.random.default_rng(17)
        x = rng.standard_normal((12, 6))
        y = np.array([0, 1, 2] * 4)
        params = init_encoder_params(6, 4, rng)
        clf = init_classifier(3, 4, "cosine", 4.0, rng)
        z = forward_head(x, params)
        gamma = gamma_coefficients(z, compute_centroids(z, y, 3))
        before, grads = loss_and_gradients(x, y, params, clf, gamma=gamma)
        lr = 1e-5
        params.weights -= lr * grads["encoder_weights"]
        params.bias -= lr * grads["encoder_bias"]
        clf.weights -= lr * grads["classifier_weights"]
        after = representation_loss(x, y, params, clf, gamma=gamma)
        assert after <= before + 1e-12


class TestTrainRepresentation:
    def test_separated_gaussians_reach_high_validation_accuracy(self):
        x, y, _ = separated_gaussians(2, 80, 6, distance=6.0, std=1.0, seed=0)
        xv, yv, _ = separated_gaussians(2, 30, 6, distance=6.0, std=1.0, seed=1)
        config = RepTrainConfig(feature_dim=8, max_epochs=50, seed=0)
        params, clf, cents = train_representation(x, y, xv, yv, 2, config)
        acc = classifier_accuracy(xv, yv, params, clf, cents, distance_aware=True)
        assert acc >= 0.95
        # sanity oracle: nearest-centroid classification agrees
        zv = forward_head(xv, params)
        _, _, _, _ = nearest_two_batch(zv, cents)
        k_a = nearest_two_batch(zv, cents)[0]
        assert np.mean(k_a == yv) >= 0.95

    def test_zero_epochs_returns_initialized_parameters(self):
        rng = np.random.default_rng(42)
        x = rng.standard_normal((20, 5))
        y = np.array([0, 1] * 10)
        config = RepTrainConfig(feature_dim=4, max_epochs=0, seed=42)
        params, clf, cents = train_representation(x, y, None, None, 2, config)
        fresh = np.random.default_rng(42)
        expected_params = init_encoder_params(5, 4, fresh)
        expected_clf = init_classifier(2, 4, "cosine", 4.0, fresh)
        assert np.array_equal(params.weights, expected_params.weights)
        assert np.array_equal(params.bias, expected_params.bias)
        assert np.array_equal(clf.weights, expected_clf.weights)

    def test_training_is_seed_deterministic(self):
        x, y, _ = separated_gaussians(3, 30, 6, distance=5.0, std=1.0, seed=3)
        config = RepTrainConfig(feature_dim=8, max_epochs=10, seed=5)
        a = train_representation(x, y, None, None, 3, config)
        b = train_representation(x, y, None, None, 3, config)
        assert np.array_equal(a[0].weights, b[0].weights)
        assert np.array_equal(a[1].weights, b[1].weights)
        assert np.array_equal(a[2].matrix, b[2].matrix)

    def test_single_class_rejected(self):
        x = np.ones((5, 3))
        with pytest.raises(ValueError, match="2 known classes"):
            train_representation(x, np.zeros(5, int), None, None, 1,
                                 RepTrainConfig())

    def test_separated_sample_nearest_centroid_is_own_class(self):
        x, y, _ = separated_gaussians(3, 40, 6, distance=8.0, std=0.5, seed=6)
        z = x  # identity representation is enough for this geometric property
        cents = compute_centroids(z, y, 3)
        k_a = nearest_two_batch(z, cents)[0]
        assert np.array_equal(k_a, y)
