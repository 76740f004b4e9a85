import numpy as np
import pytest

from inpaintkit.masking import Mask
from inpaintkit.neural.losses import (
    LossError,
    StyleFeatures,
    dip_loss,
    gram_matrix,
    masked_mse,
    style_grams,
    style_loss,
)
from inpaintkit.neural.optim import rmsprop_update
from inpaintkit.variational import tv_value_array


class TestMaskedMse:
    def test_all_occluded_mask_zero_loss_zero_grad(self, rng):
        out = rng.uniform(0, 1, (3, 6, 6))
        target = rng.uniform(0, 1, (3, 6, 6))
        loss, grad = masked_mse(out, target, Mask(np.zeros((6, 6), dtype=bool)))
        assert loss == 0.0
        assert np.all(grad == 0.0)

    def test_perfect_output_zero(self, rng):
        out = rng.uniform(0, 1, (3, 5, 5))
        loss, _ = masked_mse(out, out.copy(), Mask(np.ones((5, 5), dtype=bool)))
        assert loss == 0.0

    def test_single_reliable_pixel_closed_form(self):
        out = np.zeros((3, 4, 4))
        target = np.zeros((3, 4, 4))
        d = 0.37
        out[1, 2, 3] = d
        bits = np.zeros((4, 4), dtype=bool)
        bits[2, 3] = True
        loss, grad = masked_mse(out, target, Mask(bits))
        assert loss == pytest.approx(d * d, abs=1e-15)
        assert grad[1, 2, 3] == pytest.approx(2 * d, abs=1e-15)
        grad[1, 2, 3] = 0.0
        assert np.all(grad == 0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(LossError):
            masked_mse(np.zeros((3, 4, 4)), np.zeros((3, 5, 5)), Mask(np.ones((4, 4), bool)))


class TestDipLoss:
    def test_tv_off_equals_masked_mse(self, rng):
        out = rng.uniform(0, 1, (3, 6, 6))
        target = rng.uniform(0, 1, (3, 6, 6))
        mask = Mask(rng.uniform(size=(6, 6)) > 0.4)
        l1, g1 = dip_loss(out, target, mask, lambd=5.0, use_tv=False)
        l2, g2 = masked_mse(out, target, mask)
        assert l1 == l2
        assert np.array_equal(g1, g2)

    def test_constant_output_all_occluded_tv_floor(self):
        out = np.full((3, 8, 8), 0.5)
        mask = Mask(np.zeros((8, 8), dtype=bool))
        eps = 1e-3
        loss, grad = dip_loss(out, out.copy(), mask, lambd=5.0, use_tv=True, tv_epsilon=eps)
        assert loss == pytest.approx(3 * 7 * 7 * eps, rel=1e-12)
        assert np.abs(grad).max() == 0.0

    def test_gradient_matches_finite_differences(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            out = rng.uniform(0, 1, (3, 8, 8))
            target = rng.uniform(0, 1, (3, 8, 8))
            mask = Mask(rng.uniform(size=(8, 8)) > 0.3)
            _, g = dip_loss(out, target, mask, lambd=4.0, use_tv=True)
            h = 1e-6
            gmax = float(np.abs(g).max())
            flat = out.ravel()
            worst = 0.0
            for i in rng.integers(0, flat.size, 25):
                old = flat[i]
                flat[i] = old + h
                lp = dip_loss(out, target, mask, 4.0, True)[0]
                flat[i] = old - h
                lm = dip_loss(out, target, mask, 4.0, True)[0]
                flat[i] = old
                fd = (lp - lm) / (2 * h)
                worst = max(worst, abs(fd - g.ravel()[i]) / max(abs(fd), abs(g.ravel()[i]), 1e-3 * gmax))
            assert worst < 1e-5


class TestGramMatrix:
    def test_single_channel_squared_norm(self, rng):
        f = rng.standard_normal((1, 4, 4))
        g = gram_matrix(f)
        assert g.shape == (1, 1)
        assert g[0, 0] == pytest.approx(float(np.sum(f * f)), abs=1e-12)

    def test_orthogonal_channels_zero_off_diagonal(self):
        f = np.zeros((2, 2, 2))
        f[0, 0, :] = 1.0
        f[1, 1, :] = 1.0
        g = gram_matrix(f)
        assert g[0, 1] == 0.0 and g[1, 0] == 0.0

    def test_matches_double_loop_oracle(self, rng):
        f = rng.standard_normal((3, 4, 4))
        g = gram_matrix(f)
        for i in range(3):
            for j in range(3):
                assert g[i, j] == pytest.approx(float(np.sum(f[i] * f[j])), abs=1e-12)


class TestStyleLoss:
    def test_matching_grams_zero_loss(self, rng):
        feats = StyleFeatures(50)
        image = rng.uniform(0, 1, (3, 8, 8))
        grams = style_grams(feats, image, (0, 1, 2))
        loss, grad = style_loss(feats, image, grams, beta=0.5)
        assert loss == 0.0
        assert np.abs(grad).max() == 0.0

    def test_gradient_matches_finite_differences(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            feats = StyleFeatures(60 + seed)
            style_img = rng.uniform(0, 1, (3, 8, 8))
            grams = style_grams(feats, style_img, (0, 2))
            out = rng.uniform(0, 1, (3, 8, 8))
            _, g = style_loss(feats, out, grams, beta=0.3)
            gmax = float(np.abs(g).max())
            h = 1e-6
            flat = out.ravel()
            worst = 0.0
            for i in rng.integers(0, flat.size, 20):
                old = flat[i]
                flat[i] = old + h
                lp = style_loss(feats, out, grams, 0.3)[0]
                flat[i] = old - h
                lm = style_loss(feats, out, grams, 0.3)[0]
                flat[i] = old
                fd = (lp - lm) / (2 * h)
                worst = max(worst, abs(fd - g.ravel()[i]) / max(abs(fd), abs(g.ravel()[i]), 1e-3 * gmax))
            assert worst < 1e-4

    def test_fixed_seed_features_are_reproducible(self):
        a = StyleFeatures(123)
        b = StyleFeatures(123)
        for ka, kb in zip(a.kernels, b.kernels):
            assert np.array_equal(ka, kb)


class TestRmsprop:
    def test_zero_gradient_leaves_params_and_decays_state(self):
        values = np.array([1.0, -2.0])
        state = np.array([0.04, 0.09])
        rmsprop_update(values, np.zeros(2), state, lr=0.01, alpha=0.99, eps=1e-8)
        assert np.array_equal(values, [1.0, -2.0])
        assert np.allclose(state, [0.04 * 0.99, 0.09 * 0.99], atol=1e-18)

    def test_single_step_closed_form(self):
        values = np.array([0.0])
        state = np.array([0.0])
        rmsprop_update(values, np.array([1.0]), state, lr=0.01, alpha=0.99, eps=1e-8)
        v1 = (1.0 - 0.99) * 1.0  # closed form in the same float arithmetic
        assert state[0] == v1
        assert values[0] == -0.01 / (np.sqrt(v1) + 1e-8)
        # decimal closed form: -(0.1 - 1e-8), i.e. about -0.0999999900
        assert values[0] == pytest.approx(-0.0999999900, abs=1e-9)

    def test_two_steps_match_hand_recursion(self):
        lr, alpha, eps, g = 0.003, 0.9, 1e-8, 0.7
        values = np.array([0.2])
        state = np.array([0.0])
        # hand recursion
        v1 = (1 - alpha) * g * g
        t1 = 0.2 - lr * g / (np.sqrt(v1) + eps)
        v2 = alpha * v1 + (1 - alpha) * g * g
        t2 = t1 - lr * g / (np.sqrt(v2) + eps)
        rmsprop_update(values, np.array([g]), state, lr, alpha, eps)
        rmsprop_update(values, np.array([g]), state, lr, alpha, eps)
        assert values[0] == pytest.approx(t2, abs=1e-15)
        assert state[0] == pytest.approx(v2, abs=1e-18)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            rmsprop_update(np.zeros(2), np.zeros(3), np.zeros(2), 0.01)


def test_tv_floor_reference_against_variational_module(rng):
    # dip_loss TV term is exactly the variational module's smoothed TV
    out = rng.uniform(0, 1, (3, 6, 6))
    mask = Mask(np.zeros((6, 6), dtype=bool))
    loss, _ = dip_loss(out, out.copy(), mask, lambd=2.0, use_tv=True, tv_epsilon=1e-3)
    assert loss == pytest.approx(tv_value_array(out, 1e-3), rel=1e-15)
