import numpy as np
import pytest

from oracles import central_difference, gradient_gap
from trustrec.autoencoder import (
    SELU_ALPHA,
    SELU_LAMBDA,
    AutoencoderConfig,
    encode,
    forward,
    init_autoencoder,
    loss_and_gradients,
    masked_mse,
    rating_arrays,
    train_autoencoder,
)


def tiny_config(**overrides):
    base = dict(hidden_sizes=(5, 3, 5), learning_rate=0.01, batch_size=4, epochs=0, seed=0)
    base.update(overrides)
    return AutoencoderConfig(**base)


class TestSelu:
    def test_fixed_points(self):
        from trustrec.autoencoder import selu

        assert selu(np.array(0.0)) == 0.0
        np.testing.assert_allclose(selu(np.array(1.0)), SELU_LAMBDA, rtol=0, atol=0)
        # deep-negative asymptote
        np.testing.assert_allclose(
            selu(np.array(-60.0)), -SELU_LAMBDA * SELU_ALPHA, rtol=0, atol=1e-12
        )

    def test_monotone_and_continuous(self):
        from trustrec.autoencoder import selu

        xs = np.linspace(-6, 6, 1001)
        ys = selu(xs)
        assert np.all(np.diff(ys) > 0)
        assert abs(selu(np.array(1e-12)) - selu(np.array(-1e-12))) < 1e-11

    def test_gradient_matches_finite_differences(self):
        from trustrec.autoencoder import selu, selu_grad

        xs = np.array([-3.0, -1.0, -0.1, 0.2, 1.0, 4.0])
        numeric = (selu(xs + 1e-6) - selu(xs - 1e-6)) / 2e-6
        np.testing.assert_allclose(selu_grad(xs), numeric, rtol=1e-6)


class TestConfig:
    def test_even_layer_count_rejected(self):
        with pytest.raises(ValueError):
            AutoencoderConfig(hidden_sizes=(8, 4, 4, 8))

    def test_asymmetric_stack_rejected(self):
        with pytest.raises(ValueError):
            AutoencoderConfig(hidden_sizes=(8, 4, 6))

    def test_code_size_is_middle_entry(self):
        assert AutoencoderConfig().code_size == 10
        assert tiny_config().code_size == 3


class TestMaskedMse:
    def test_hand_values(self):
        r = np.array([5.0, 0.0, 3.0])
        y = np.array([4.0, 2.0, 3.0])
        m = np.array([1.0, 0.0, 1.0])
        assert masked_mse(y, r, m) == 0.5
        assert masked_mse(np.array([0.0]), np.array([2.0]), np.array([1.0])) == 4.0

    def test_perfect_reconstruction(self):
        r = np.array([[1.0, 2.0], [3.0, 0.0]])
        m = (r != 0).astype(float)
        assert masked_mse(r, r, m) == 0.0

    def test_empty_mask_rejected(self):
        with pytest.raises(ValueError):
            masked_mse(np.zeros(3), np.zeros(3), np.zeros(3))

    def test_masked_positions_ignored_to_the_bit(self):
        rng = np.random.default_rng(1)
        r = rng.normal(size=8)
        y = rng.normal(size=8)
        m = np.array([1.0, 0, 1, 0, 0, 1, 1, 0])
        base = masked_mse(y, r, m)
        poked = y + 1000.0 * (1.0 - m)
        assert masked_mse(poked, r, m) == base


class TestForward:
    def test_zero_model_propagates_zero(self):
        model = init_autoencoder(4, tiny_config(), np.random.default_rng(0))
        for w in model.weights:
            w[:] = 0.0
        acts, _ = forward(model, np.ones((2, 4)))
        np.testing.assert_array_equal(acts[-1], np.zeros((2, 4)))
        np.testing.assert_array_equal(acts[model.code_layer], np.zeros((2, 3)))

    def test_deterministic(self):
        model = init_autoencoder(6, tiny_config(seed=3), np.random.default_rng(3))
        x = np.random.default_rng(5).normal(size=(3, 6))
        a, _ = forward(model, x)
        b, _ = forward(model, x)
        np.testing.assert_array_equal(a[-1], b[-1])

    def test_dimension_mismatch_rejected(self):
        model = init_autoencoder(4, tiny_config(), np.random.default_rng(0))
        with pytest.raises(ValueError):
            forward(model, np.ones((2, 5)))

    def test_shapes_mirror_around_code(self):
        model = init_autoencoder(9, AutoencoderConfig(hidden_sizes=(7, 4, 2, 4, 7)), np.random.default_rng(0))
        shapes = [w.shape for w in model.weights]
        for left, right in zip(shapes, reversed(shapes)):
            assert left == right[::-1]


class TestGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        model = init_autoencoder(6, tiny_config(seed=7), rng)
        targets = rng.uniform(1.0, 5.0, size=(4, 6))
        mask = (rng.random((4, 6)) < 0.6).astype(float)
        mask[0, 0] = 1.0  # keep at least one observation
        _, w_grads, b_grads = loss_and_gradients(model, targets, mask)

        for layer in range(len(model.weights)):
            def loss_at_w(wmat, layer=layer):
                saved = model.weights[layer]
                model.weights[layer] = wmat
                acts, _ = forward(model, targets * mask)
                out = masked_mse(acts[-1], targets, mask)
                model.weights[layer] = saved
                return out

            numeric = central_difference(loss_at_w, model.weights[layer])
            assert gradient_gap(w_grads[layer], numeric) < 1e-4

            def loss_at_b(bvec, layer=layer):
                saved = model.biases[layer]
                model.biases[layer] = bvec
                acts, _ = forward(model, targets * mask)
                out = masked_mse(acts[-1], targets, mask)
                model.biases[layer] = saved
                return out

            numeric_b = central_difference(loss_at_b, model.biases[layer])
            assert gradient_gap(b_grads[layer], numeric_b) < 1e-4

    def test_unobserved_values_inert_to_the_bit(self):
        rng = np.random.default_rng(9)
        model = init_autoencoder(5, tiny_config(seed=9), rng)
        targets = rng.uniform(1.0, 5.0, size=(3, 5))
        mask = np.array([[1.0, 0, 1, 0, 1], [0, 1, 0, 1, 0], [1, 1, 0, 0, 0]])
        loss, w_grads, _ = loss_and_gradients(model, targets, mask)
        poked = targets + 500.0 * (1.0 - mask)
        loss2, w_grads2, _ = loss_and_gradients(model, poked, mask)
        assert loss2 == loss
        for a, b in zip(w_grads, w_grads2):
            np.testing.assert_array_equal(a, b)


class TestTraining:
    def test_zero_epochs_returns_untrained_model(self):
        rng = np.random.default_rng(0)
        targets = rng.uniform(1.0, 5.0, size=(6, 5))
        mask = np.ones_like(targets)
        model = train_autoencoder(targets, mask, tiny_config(epochs=0))
        fresh = init_autoencoder(5, tiny_config(epochs=0), np.random.default_rng(0))
        assert model.loss_history == []
        for a, b in zip(model.weights, fresh.weights):
            np.testing.assert_array_equal(a, b)

    def test_beats_constant_mean_reconstructor(self):
        rng = np.random.default_rng(2)
        targets = np.array(
            [
                [5.0, 1.0, 4.0, 1.0],
                [4.0, 2.0, 5.0, 1.0],
                [1.0, 5.0, 2.0, 4.0],
                [2.0, 4.0, 1.0, 5.0],
            ]
        )
        mask = np.ones_like(targets)
        config = tiny_config(hidden_sizes=(4, 2, 4), learning_rate=0.02, epochs=200, seed=2)
        model = train_autoencoder(targets, mask, config)
        mean = targets.mean()
        constant_loss = masked_mse(np.full_like(targets, mean), targets, mask)
        assert model.loss_history[-1] < constant_loss

    def test_low_rank_data_reconstructed(self):
        rng = np.random.default_rng(4)
        u = rng.uniform(0.5, 1.5, size=(30, 3))
        v = rng.uniform(0.5, 1.5, size=(3, 12))
        targets = u @ v  # noiseless rank 3
        mask = (rng.random(targets.shape) < 0.7).astype(float)
        config = AutoencoderConfig(
            hidden_sizes=(16, 3, 16), learning_rate=0.02, batch_size=8, epochs=2000, seed=4
        )
        model = train_autoencoder(targets, mask, config)
        assert model.loss_history[-1] < 0.01

    def test_same_seed_identical_weights(self):
        rng = np.random.default_rng(6)
        targets = rng.uniform(1.0, 5.0, size=(10, 6))
        mask = (rng.random((10, 6)) < 0.8).astype(float)
        mask[0] = 1.0
        config = tiny_config(hidden_sizes=(4, 2, 4), epochs=15, seed=11)
        a = train_autoencoder(targets, mask, config)
        b = train_autoencoder(targets, mask, config)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)

    def test_no_observations_rejected(self):
        with pytest.raises(ValueError):
            train_autoencoder(np.zeros((3, 4)), np.zeros((3, 4)), tiny_config(epochs=1))


class TestEncode:
    def test_identical_rows_get_identical_codes(self):
        rng = np.random.default_rng(8)
        model = init_autoencoder(6, tiny_config(seed=8), rng)
        row = rng.uniform(1.0, 5.0, size=6)
        targets = np.stack([row, row, row * 0.0])
        mask = (targets != 0).astype(float)
        codes = encode(model, targets, mask)
        assert codes.shape == (3, 3)
        np.testing.assert_array_equal(codes[0], codes[1])

    def test_all_zero_row_gets_bias_driven_code(self):
        rng = np.random.default_rng(8)
        model = init_autoencoder(6, tiny_config(seed=8), rng)
        codes = encode(model, np.zeros((1, 6)), np.zeros((1, 6)))
        # zero input with zero biases lands exactly on selu(0) = 0
        np.testing.assert_array_equal(codes, np.zeros((1, 3)))


class TestRatingArrays:
    def test_user_rows_and_item_rows(self, make_ratings):
        ratings = make_ratings([(0, 1, 3.0), (1, 0, 2.0), (1, 2, 5.0)], 2, 3)
        t_users, m_users = rating_arrays(ratings, axis="users")
        assert t_users.shape == (2, 3)
        assert t_users[0, 1] == 3.0 and m_users[0, 1] == 1.0
        assert m_users.sum() == 3
        t_items, m_items = rating_arrays(ratings, axis="items")
        assert t_items.shape == (3, 2)
        np.testing.assert_array_equal(t_items, t_users.T)

    def test_unknown_axis_rejected(self, make_ratings):
        ratings = make_ratings([(0, 0, 1.0)], 1, 1)
        with pytest.raises(ValueError):
            rating_arrays(ratings, axis="columns")
