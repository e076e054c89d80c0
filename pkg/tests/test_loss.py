import math

import numpy as np
import pytest

from errors import ValidationError
from linalg import singular_values
from loss import (
    LossContext,
    gradient_smooth,
    logistic,
    objective_full,
    objective_smooth,
    softplus,
)
from pairs import LabeledModality, PairSupervision, build_supervision
from diagnose import finite_difference_gradient, random_context


def context(x, z, x_labels, z_labels):
    x_mod = LabeledModality(np.asarray(x, dtype=float), x_labels)
    z_mod = LabeledModality(np.asarray(z, dtype=float), z_labels)
    return LossContext(x=x_mod.features, z=z_mod.features, sup=build_supervision(x_mod, z_mod))


def single_pair(x, z):
    x = np.asarray(x, dtype=float).reshape(-1, 1)
    z = np.asarray(z, dtype=float).reshape(-1, 1)
    sup = PairSupervision(y=np.ones((1, 1)), w=np.ones((1, 1)), positives=1, negatives=0)
    return LossContext(x=x, z=z, sup=sup)


def loop_loss(ctx, m):
    total = 0.0
    for i in range(ctx.x.shape[1]):
        for j in range(ctx.z.shape[1]):
            s = float(ctx.x[:, i] @ m @ ctx.z[:, j])
            total += ctx.sup.w[i, j] * math.log1p(math.exp(-ctx.sup.y[i, j] * s))
    return total


class TestStableFunctions:

    def test_softplus_no_overflow(self):
        t = np.array([-1e4, -50.0, 0.0, 50.0, 1e4])
        out = softplus(t)
        assert np.all(np.isfinite(out))
        assert out[0] == 0.0
        assert out[2] == pytest.approx(math.log(2.0))
        assert out[4] == pytest.approx(1e4)

    def test_logistic_no_overflow(self):
        out = logistic(np.array([-1e4, 0.0, 1e4]))
        np.testing.assert_allclose(out, [0.0, 0.5, 1.0])


class TestObjective:

    def test_zero_model_is_two_log_two(self, rng):
        ctx = random_context(rng)
        zero = np.zeros(ctx.model_shape)
        assert objective_smooth(ctx, zero) == pytest.approx(2 * math.log(2), abs=1e-12)

    def test_saturated_pair(self):
        ctx = single_pair([1.0], [1.0])
        assert objective_smooth(ctx, [[50.0]]) < 1e-20

    def test_matches_scalar_loop(self, rng):
        ctx = context(rng.standard_normal((3, 4)), rng.standard_normal((2, 4)), [0, 1, 0, 2], [0, 1, 2, 2])
        m = rng.standard_normal((3, 2))
        assert objective_smooth(ctx, m) == pytest.approx(loop_loss(ctx, m), abs=1e-12)

    def test_full_objective_adds_nuclear_norm(self, rng):
        ctx = context(rng.standard_normal((3, 4)), rng.standard_normal((2, 4)), [0, 1, 0, 2], [0, 1, 2, 2])
        m = rng.standard_normal((3, 2))
        expected = loop_loss(ctx, m) + 0.3 * float(np.sum(singular_values(m)))
        assert objective_full(ctx, m, 0.3) == pytest.approx(expected, abs=1e-10)

    def test_full_objective_at_zero(self, rng):
        ctx = random_context(rng)
        zero = np.zeros(ctx.model_shape)
        assert objective_full(ctx, zero, 5.0) == objective_smooth(ctx, zero)

    def test_identity_block_adds_min_dim(self, rng):
        ctx = context(rng.standard_normal((4, 3)), rng.standard_normal((3, 3)), [0, 1, 1], [0, 1, 0])
        m = np.eye(4, 3)
        assert objective_full(ctx, m, 1.0) - objective_smooth(ctx, m) == pytest.approx(3.0)

    def test_negative_lambda_rejected(self, rng):
        ctx = random_context(rng)
        with pytest.raises(ValidationError):
            objective_full(ctx, np.zeros(ctx.model_shape), -1.0)

    def test_shape_mismatch_rejected(self, rng):
        ctx = random_context(rng)
        d1, d2 = ctx.model_shape
        with pytest.raises(ValidationError):
            objective_smooth(ctx, np.zeros((d1 + 1, d2)))

    def test_convex_along_lines(self, rng):
        ctx = random_context(rng)
        for _ in range(20):
            m1 = rng.standard_normal(ctx.model_shape)
            m2 = rng.standard_normal(ctx.model_shape)
            t = float(rng.uniform())
            mixed = objective_smooth(ctx, t * m1 + (1 - t) * m2)
            bound = t * objective_smooth(ctx, m1) + (1 - t) * objective_smooth(ctx, m2)
            assert mixed <= bound + 1e-10

    def test_sign_flip_symmetry(self, rng):
        ctx = random_context(rng)
        flipped = LossContext(
            x=ctx.x, z=ctx.z,
            sup=PairSupervision(y=-ctx.sup.y, w=ctx.sup.w,
                                positives=ctx.sup.negatives, negatives=ctx.sup.positives),
        )
        m = rng.standard_normal(ctx.model_shape)
        assert objective_smooth(ctx, m) == pytest.approx(objective_smooth(flipped, -m), abs=1e-12)

    def test_large_margins_stay_finite(self):
        ctx = single_pair([1.0], [1.0])
        assert np.isfinite(objective_smooth(ctx, [[-1e4]]))
        assert objective_smooth(ctx, [[-1e4]]) == pytest.approx(1e4)
        assert np.all(np.isfinite(gradient_smooth(ctx, [[-1e4]])))

    def test_supervision_shape_must_match_features(self, rng):
        sup = PairSupervision(y=np.ones((2, 2)), w=np.ones((2, 2)), positives=4, negatives=0)
        with pytest.raises(ValidationError):
            LossContext(x=rng.standard_normal((3, 3)), z=rng.standard_normal((2, 2)), sup=sup)


class TestGradient:

    def test_single_pair_at_zero(self):
        x, z = np.array([1.0, -2.0]), np.array([0.5, 3.0, 1.0])
        ctx = single_pair(x, z)
        np.testing.assert_allclose(gradient_smooth(ctx, np.zeros((2, 3))), -0.5 * np.outer(x, z))

    def test_zero_features_give_zero_gradient(self, rng):
        ctx = context(np.zeros((3, 4)), rng.standard_normal((2, 3)), [0, 1, 0, 1], [0, 1, 1])
        grad = gradient_smooth(ctx, rng.standard_normal((3, 2)))
        np.testing.assert_array_equal(grad, np.zeros((3, 2)))

    def test_matches_finite_differences(self, rng):
        ctx = context(rng.standard_normal((5, 4)), rng.standard_normal((7, 6)),
                      [0, 1, 2, 0], [0, 0, 1, 2, 2, 1])
        q = rng.standard_normal((5, 7)) * 0.5
        analytic = gradient_smooth(ctx, q)
        numeric = finite_difference_gradient(ctx, q)
        assert np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric) < 1e-5

    @pytest.mark.parametrize('seed', range(10))
    def test_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        ctx = random_context(rng)
        q = rng.standard_normal(ctx.model_shape) * 0.5
        analytic = gradient_smooth(ctx, q)
        numeric = finite_difference_gradient(ctx, q)
        assert np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12) < 1e-5
