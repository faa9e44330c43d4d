"""Self-normalized and unnormalized estimators, prediction helpers."""

import math

import numpy as np
import pytest
from scipy import special

from srais import (
    CapabilityError,
    DegenerateWeightsError,
    classify_accuracy,
    is_estimate,
    posterior_predictive,
    snis_estimate,
    squared_error,
)
from srais.estimators import sigmoid


class TestSnis:
    def test_hand_worked_average(self):
        points = np.array([[3.0], [6.0]])
        lw = np.log([2.0, 1.0])
        est = snis_estimate(lambda x: x[:, 0], points, lw)
        assert est.value == pytest.approx(4.0, abs=1e-12)
        assert est.n_used == 2
        # (2+1)^2 / (4+1)
        assert est.ess == pytest.approx(1.8, abs=1e-12)
        assert est.estimator_kind == "snis"

    def test_vector_valued_integrand(self):
        points = np.array([[3.0, 10.0], [6.0, 20.0]])
        lw = np.log([2.0, 1.0])
        est = snis_estimate(lambda x: x, points, lw)
        assert est.value == pytest.approx([4.0, 40.0 / 3.0], abs=1e-12)

    def test_invariant_to_log_weight_shift(self):
        rng = np.random.default_rng(3)
        points = rng.normal(size=(40, 2))
        lw = rng.normal(size=40)
        a = snis_estimate(lambda x: x[:, 0] ** 2, points, lw)
        b = snis_estimate(lambda x: x[:, 0] ** 2, points, lw + 123.0)
        assert a.value == pytest.approx(b.value, rel=1e-12)

    def test_all_zero_weights_raise(self):
        points = np.zeros((3, 1))
        with pytest.raises(DegenerateWeightsError):
            snis_estimate(lambda x: x[:, 0], points, np.full(3, -np.inf))


class TestIsEstimate:
    def test_divides_by_total_count(self):
        points = np.array([[1.0], [2.0]])
        lw = np.log([4.0, 8.0])
        est = is_estimate(
            lambda x: x[:, 0], points, lw, n_total=4, target_normalized=True
        )
        # (4*1 + 8*2) / 4
        assert est.value == pytest.approx(5.0, abs=1e-12)
        assert est.estimator_kind == "is"

    def test_requires_normalized_target(self):
        points = np.zeros((2, 1))
        with pytest.raises(CapabilityError):
            is_estimate(
                lambda x: x[:, 0], points, np.zeros(2), n_total=2, target_normalized=False
            )

    def test_total_count_lower_bound(self):
        points = np.zeros((3, 1))
        with pytest.raises(ValueError, match="n_total"):
            is_estimate(
                lambda x: x[:, 0], points, np.zeros(3), n_total=2, target_normalized=True
            )


class TestSquaredError:
    def test_hand_worked_value(self):
        est = np.zeros(16)
        truth = np.full(16, 1.25)
        assert squared_error(est, truth) == pytest.approx(25.0, abs=1e-12)

    def test_scalar_inputs(self):
        assert squared_error(3.0, 1.0) == pytest.approx(4.0, abs=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            squared_error(np.zeros(3), np.zeros(4))


class TestPrediction:
    def test_sigmoid_matches_scipy(self):
        x = np.linspace(-30.0, 30.0, 41)
        assert sigmoid(x) == pytest.approx(special.expit(x), abs=1e-15)

    def test_posterior_predictive_single_draw(self):
        # one posterior draw: coefficients (2, 1), trailing precision ignored
        particles = np.array([[2.0, 1.0, 7.0]])
        weights = np.array([1.0])
        probs = posterior_predictive(np.array([[1.0, 4.0]]), particles, weights)
        assert probs == pytest.approx([1.0 / (1.0 + math.exp(-6.0))], abs=1e-12)

    def test_posterior_predictive_mixes_draws(self):
        particles = np.array([[10.0, 3.0], [-10.0, 3.0]])
        weights = np.array([0.5, 0.5])
        probs = posterior_predictive(np.array([1.0]), particles, weights)
        expected = 0.5 * sigmoid(10.0) + 0.5 * sigmoid(-10.0)
        assert float(probs) == pytest.approx(expected, abs=1e-12)

    def test_posterior_predictive_rejects_unnormalized_weights(self):
        particles = np.zeros((2, 2))
        with pytest.raises(ValueError, match="sum"):
            posterior_predictive(np.zeros((1, 1)), particles, np.array([0.7, 0.7]))

    def test_posterior_predictive_rejects_feature_mismatch(self):
        particles = np.zeros((1, 3))  # two coefficients + precision
        with pytest.raises(ValueError, match="dimension"):
            posterior_predictive(np.zeros((1, 3)), particles, np.array([1.0]))

    def test_classify_accuracy(self):
        # single particle, coefficient 1: prob = sigmoid(feature)
        particles = np.array([[1.0, 1.0]])
        weights = np.array([1.0])
        features = np.array([[2.0], [-2.0]])
        args = (particles, weights)
        assert classify_accuracy(features, np.array([1.0, -1.0]), *args) == 1.0
        assert classify_accuracy(features, np.array([-1.0, 1.0]), *args) == 0.0
        assert classify_accuracy(features, np.array([1.0, 1.0]), *args) == 0.5

    def test_classify_accuracy_rejects_label_shape_mismatch(self):
        particles = np.array([[1.0, 1.0]])
        with pytest.raises(ValueError, match="labels"):
            classify_accuracy(
                np.zeros((2, 1)), np.zeros(3), particles, np.array([1.0])
            )
