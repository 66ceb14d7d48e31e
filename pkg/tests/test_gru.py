import math

import numpy as np
import pytest

from log_oversampler.config import ClassifierConfig, OptimizerConfig
from log_oversampler.errors import ArgumentError, ConsistencyError, NumericError, ShapeError
from log_oversampler.models import (
    ClassifierHead,
    GruClassifier,
    GruParams,
    bptt,
    cell_forward,
    classify,
    features_to_sequence,
    seq_forward,
    train_classifier,
)
from log_oversampler.nn import numerical_gradient


def _sequence_loss(params, xs, upstream):
    h_T, _ = seq_forward(xs, params)
    return float(np.sum(h_T * upstream))


class TestCell:
    def test_shapes(self, rng):
        params = GruParams.init(3, 5, rng)
        h, step = cell_forward(rng.normal(size=(4, 3)), np.zeros((4, 5)), params)
        assert h.shape == (4, 5)
        assert step.r.shape == step.z.shape == step.candidate.shape == (4, 5)

    def test_update_gate_weights_previous_state(self):
        # zero weights: r = z = 0.5 and the candidate is tanh(0) = 0
        params = GruParams.zeros(2, 3)
        h_prev = np.array([[1.0, -2.0, 4.0]])
        h, _ = cell_forward(np.ones((1, 2)), h_prev, params)
        np.testing.assert_allclose(h, 0.5 * h_prev)

    def test_state_stays_bounded(self, rng):
        params = GruParams.init(2, 6, rng)
        xs = rng.normal(size=(200, 3, 2)) * 10
        h_T, trace = seq_forward(xs, params)
        assert trace.length == 200
        assert np.all(np.abs(h_T) <= 1.0)

    def test_zero_state_stays_zero(self):
        h, _ = cell_forward(np.ones((1, 2)), np.zeros((1, 3)), GruParams.zeros(2, 3))
        np.testing.assert_array_equal(h, 0.0)

    def test_saturated_update_gate_passes_state_through(self, rng):
        params = GruParams.init(2, 3, rng, dtype=np.float64)
        params.b_z.value = np.full((1, 3), 50.0)
        h_prev = rng.uniform(-1, 1, size=(4, 3))
        h, _ = cell_forward(rng.normal(size=(4, 2)), h_prev, params)
        np.testing.assert_allclose(h, h_prev, atol=1e-6)

    def test_gates_and_convex_combination(self, rng):
        params = GruParams.init(3, 5, rng, dtype=np.float64)
        _, trace = seq_forward(rng.normal(size=(20, 4, 3)), params, h0=rng.uniform(-1, 1, size=(4, 5)))
        for step in trace.steps:
            assert np.all((step.r > 0) & (step.r < 1))
            assert np.all((step.z > 0) & (step.z < 1))
            assert np.all(np.abs(step.candidate) < 1)
            low = np.minimum(step.h_prev, step.candidate)
            high = np.maximum(step.h_prev, step.candidate)
            assert np.all((step.h >= low - 1e-12) & (step.h <= high + 1e-12))

    def test_rejects_mismatched_state(self, rng):
        params = GruParams.init(3, 5, rng)
        with pytest.raises(ShapeError):
            cell_forward(np.zeros((4, 3)), np.zeros((4, 6)), params)

    def test_empty_sequence_raises(self, rng):
        with pytest.raises(ArgumentError):
            seq_forward(np.zeros((0, 2, 3)), GruParams.init(3, 4, rng))


class TestSequence:
    def test_length_one_is_one_cell(self, rng):
        params = GruParams.init(3, 4, rng)
        x = rng.normal(size=(2, 3)).astype(np.float32)
        h_seq, _ = seq_forward(x[None], params)
        h_cell, _ = cell_forward(x, np.zeros((2, 4), np.float32), params)
        np.testing.assert_array_equal(h_seq, h_cell)

    def test_zero_params_halve_the_state(self, rng):
        v = np.array([[0.8, -0.4]])
        h_T, _ = seq_forward(rng.normal(size=(5, 1, 3)), GruParams.zeros(3, 2, np.float64), h0=v)
        np.testing.assert_allclose(h_T, v / 2**5)

    def test_matches_scalar_loop(self, rng):
        params = GruParams.init(2, 2, rng, dtype=np.float64)
        xs = rng.normal(size=(3, 1, 2))
        h_T, _ = seq_forward(xs, params)

        def sig(a):
            return 1 / (1 + math.exp(-a))

        W = {name: p.value for name, p in params.tensors().items()}
        h = [0.0, 0.0]
        for t in range(3):
            x = xs[t, 0]
            r = [sig(sum(x[i] * W["W_r"][i, j] for i in range(2)) + sum(h[i] * W["U_r"][i, j] for i in range(2)) + W["b_r"][0, j]) for j in range(2)]
            z = [sig(sum(x[i] * W["W_z"][i, j] for i in range(2)) + sum(h[i] * W["U_z"][i, j] for i in range(2)) + W["b_z"][0, j]) for j in range(2)]
            c = [
                math.tanh(sum(x[i] * W["W_h"][i, j] for i in range(2)) + sum(r[i] * h[i] * W["U_h"][i, j] for i in range(2)) + W["b_h"][0, j])
                for j in range(2)
            ]
            h = [z[j] * h[j] + (1 - z[j]) * c[j] for j in range(2)]
        np.testing.assert_allclose(h_T[0], h, atol=1e-6)

    def test_is_deterministic(self, rng):
        params = GruParams.init(3, 4, rng)
        xs = rng.normal(size=(6, 2, 3)).astype(np.float32)
        a, _ = seq_forward(xs, params)
        b, _ = seq_forward(xs, params)
        assert a.tobytes() == b.tobytes()


class TestBptt:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("length", [1, 4, 10])
    def test_gradients_match_finite_differences(self, seed, length):
        rng = np.random.default_rng(seed)
        params = GruParams.init(3, 4, rng, dtype=np.float64)
        xs = rng.normal(size=(length, 2, 3))
        upstream = rng.normal(size=(2, 4))

        _, trace = seq_forward(xs, params)
        bptt(trace, upstream, params)
        for name, tensor in params.tensors().items():
            numeric = numerical_gradient(lambda _: _sequence_loss(params, xs, upstream), tensor)
            np.testing.assert_allclose(tensor.grad, numeric, rtol=1e-4, atol=1e-7, err_msg=name)

    def test_input_gradients(self, rng):
        params = GruParams.init(2, 3, rng, dtype=np.float64)
        xs = rng.normal(size=(4, 1, 2))
        upstream = rng.normal(size=(1, 3))
        _, trace = seq_forward(xs, params)
        dxs, _ = bptt(trace, upstream, params)

        step = 1e-6
        for t in range(4):
            for j in range(2):
                plus, minus = xs.copy(), xs.copy()
                plus[t, 0, j] += step
                minus[t, 0, j] -= step
                numeric = (_sequence_loss(params, plus, upstream) - _sequence_loss(params, minus, upstream)) / (2 * step)
                assert dxs[t][0, j] == pytest.approx(numeric, rel=1e-4, abs=1e-8)

    def test_zero_upstream_gives_zero_gradients(self, rng):
        params = GruParams.init(3, 4, rng)
        _, trace = seq_forward(rng.normal(size=(4, 2, 3)), params)
        bptt(trace, np.zeros((2, 4)), params)
        for name, tensor in params.tensors().items():
            np.testing.assert_array_equal(tensor.grad, 0.0, err_msg=name)

    def test_scalar_update_gate_gradient(self, rng):
        params = GruParams.init(1, 1, rng, dtype=np.float64)
        h0 = np.array([[0.7]])
        _, trace = seq_forward(np.array([[[0.3]]]), params, h0=h0)
        bptt(trace, np.ones((1, 1)), params)
        step = trace.steps[0]
        z = step.z[0, 0]
        expected = z * (1 - z) * (h0[0, 0] - step.candidate[0, 0])
        assert params.b_z.grad[0, 0] == pytest.approx(expected, abs=1e-6)

    def test_trace_from_other_params_is_rejected(self, rng):
        a = GruParams.init(2, 3, rng)
        b = GruParams.init(2, 3, rng)
        _, trace = seq_forward(rng.normal(size=(3, 1, 2)), a)
        with pytest.raises(ConsistencyError):
            bptt(trace, np.ones((1, 3)), b)


class TestClassifier:
    def test_default_architecture(self):
        config = ClassifierConfig()
        assert (config.hidden_dim, config.batch_size, config.max_epochs, config.folds) == (100, 128, 100, 10)
        assert config.keep_prob == 0.8

    def test_features_become_scalar_steps(self):
        seq = features_to_sequence(np.zeros((7, 40)))
        assert seq.shape == (40, 7, 1)

    def test_classify_outputs_probabilities(self, rng):
        model = GruClassifier.init(6, rng)
        probs = classify(features_to_sequence(rng.random((5, 10))), model.gru, model.head)
        assert probs.shape == (5, 2)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, rtol=1e-5)

    def test_zero_head_is_uninformative(self, rng):
        model = GruClassifier.init(4, rng)
        model.head.W_out.value = np.zeros_like(model.head.W_out.value)
        model.head.b_out.value = np.zeros_like(model.head.b_out.value)
        np.testing.assert_allclose(model.predict_proba(rng.random((3, 8))), 0.5)

    def test_head_gradient(self, rng):
        model = GruClassifier(GruParams.init(1, 4, rng, np.float64), ClassifierHead.init(4, rng, np.float64))
        features = rng.random((3, 6))
        labels = np.array([0, 1, 1])
        model.train_batch(features, labels, keep_prob=1.0, rng=rng)
        for name, tensor in model.tensors().items():
            numeric = numerical_gradient(lambda _: model.evaluate(features, labels)[0], tensor)
            np.testing.assert_allclose(tensor.grad, numeric, rtol=1e-4, atol=1e-7, err_msg=name)

    def test_learns_a_separable_problem(self, rng):
        n = 200
        labels = rng.integers(0, 2, size=n)
        features = np.where(labels[:, None] == 1, 0.8, 0.2) + rng.normal(0, 0.05, size=(n, 8))
        config = ClassifierConfig(
            hidden_dim=8, max_epochs=30, batch_size=32, patience=30, optimizer=OptimizerConfig(alpha=0.01)
        )
        model, history, best_epoch = train_classifier(
            features, labels, config, rng, val_features=features, val_labels=labels
        )
        assert 1 <= best_epoch <= len(history)
        _, accuracy = model.evaluate(features, labels)
        assert accuracy > 0.95

    def test_fixed_epochs_without_validation(self, rng):
        config = ClassifierConfig(hidden_dim=4, max_epochs=50, batch_size=8)
        _, history, _ = train_classifier(rng.random((16, 5)), rng.integers(0, 2, 16), config, rng, epochs=3)
        assert len(history) == 3

    def test_zero_records_raises(self, rng):
        with pytest.raises(ArgumentError):
            train_classifier(np.zeros((0, 5)), np.zeros(0), ClassifierConfig(), rng)

    def test_non_finite_validation_loss_raises(self, rng):
        config = ClassifierConfig(hidden_dim=4, max_epochs=5, batch_size=8, patience=1)
        val = np.full((4, 5), np.nan)
        with pytest.raises(NumericError):
            train_classifier(
                rng.random((16, 5)),
                rng.integers(0, 2, 16),
                config,
                rng,
                val_features=val,
                val_labels=np.array([0, 1, 0, 1]),
            )
