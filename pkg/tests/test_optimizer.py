import math

import numpy as np
import pytest

import optimizer
from diagnose import random_context
from errors import NumericalError, ValidationError
from loss import LossContext, gradient_smooth, objective_smooth
from optimizer import (
    TRACE_COLUMNS,
    SimilarityModel,
    TrainConfig,
    backtracking_step,
    config_hash,
    minimize,
    momentum_sequence,
    train,
)
from pairs import LabeledModality, build_supervision

BENCHMARK_LAMBDA = 1e-3


def benchmark_context(bundle):
    sup = build_supervision(bundle.train_x, bundle.train_z)
    return LossContext(x=bundle.train_x.features, z=bundle.train_z.features, sup=sup)


class TestMomentum:

    def test_first_step(self):
        alpha_2 = momentum_sequence(1.0)
        assert alpha_2 == pytest.approx((1 + math.sqrt(5)) / 2)
        assert (1.0 - 1.0) / alpha_2 == 0.0

    def test_asymptotic_increment(self):
        alpha = 100.0
        increment = momentum_sequence(alpha) - alpha
        assert 0.5 < increment < 0.5 + 1 / (2 * alpha)

    def test_strictly_increasing(self):
        alpha = 1.0
        for _ in range(50):
            nxt = momentum_sequence(alpha)
            assert nxt > alpha
            alpha = nxt

    def test_rejects_alpha_below_one(self):
        with pytest.raises(ValidationError):
            momentum_sequence(0.5)


class TestTrainConfig:

    @pytest.mark.parametrize('kwargs', [
        {'lam': -1.0},
        {'lam': float('nan')},
        {'lam': 1e-3, 'max_iters': 0},
        {'lam': 1e-3, 'rel_tol': 0.0},
        {'lam': 1e-3, 'eta0': 0.0},
        {'lam': 1e-3, 'backtrack_shrink': 1.0},
        {'lam': 1e-3, 'step_growth': 0.9},
        {'lam': 1e-3, 'pca_energy': 1.5},
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            TrainConfig(**kwargs)

    def test_hash_is_stable_and_sensitive(self):
        assert config_hash(TrainConfig(lam=1e-3)) == config_hash(TrainConfig(lam=1e-3))
        assert config_hash(TrainConfig(lam=1e-3)) != config_hash(TrainConfig(lam=1e-2))


class TestBacktracking:

    def test_zero_gradient_fixed_point(self, rng):
        x_mod = LabeledModality(np.zeros((3, 4)), [0, 1, 0, 1])
        z_mod = LabeledModality(rng.standard_normal((2, 3)), [0, 1, 1])
        ctx = LossContext(x=x_mod.features, z=z_mod.features, sup=build_supervision(x_mod, z_mod))
        q = rng.standard_normal((3, 2))
        step = backtracking_step(ctx, q, 1.0, 0.0)
        assert step.eta == 1.0
        np.testing.assert_allclose(step.m_next, q, atol=1e-10)

    def test_accepted_step_satisfies_majorization(self, rng):
        ctx = random_context(rng)
        q = rng.standard_normal(ctx.model_shape)
        step = backtracking_step(ctx, q, 50.0, 0.05)
        grad = gradient_smooth(ctx, q)
        delta = step.m_next - q
        bound = (objective_smooth(ctx, q) + np.sum(grad * delta)
                 + np.sum(delta * delta) / (2 * step.eta))
        assert objective_smooth(ctx, step.m_next) <= bound + 1e-10
        assert step.eta <= 50.0

    def test_huge_lambda_kills_step(self, rng):
        ctx = random_context(rng)
        step = backtracking_step(ctx, np.zeros(ctx.model_shape), 1.0, 1e6)
        np.testing.assert_array_equal(step.m_next, np.zeros(ctx.model_shape))

    def test_first_step_from_zero_follows_zero_gradient(self, rng):
        ctx = random_context(rng)
        zero = np.zeros(ctx.model_shape)
        step = backtracking_step(ctx, zero, 1.0, 0.0)
        np.testing.assert_allclose(step.m_next, -step.eta * gradient_smooth(ctx, zero), atol=1e-10)

    def test_step_underflow_aborts(self, rng, monkeypatch):
        ctx = random_context(rng)
        monkeypatch.setattr(optimizer, 'gradient_smooth', lambda c, q: -1e6 * gradient_smooth(c, q))
        with pytest.raises(NumericalError):
            backtracking_step(ctx, np.zeros(ctx.model_shape), 1.0, 0.0)

    def test_invalid_step_rejected(self, rng):
        ctx = random_context(rng)
        with pytest.raises(ValidationError):
            backtracking_step(ctx, np.zeros(ctx.model_shape), 0.0, 0.0)


class TestMinimize:

    def test_single_positive_pair_driven_to_zero(self):
        x_mod = LabeledModality(np.array([[1.0], [0.5]]), [3])
        z_mod = LabeledModality(np.array([[0.8], [-0.4]]), [3])
        sup = build_supervision(x_mod, z_mod, require_both=False)
        ctx = LossContext(x=x_mod.features, z=z_mod.features, sup=sup)
        best_m, trace = minimize(ctx, TrainConfig(lam=0.0, max_iters=200, rel_tol=1e-15))
        assert np.all(np.diff(trace.best_objectives) <= 0)
        assert objective_smooth(ctx, best_m) < 0.01

    def test_huge_lambda_returns_zero(self, small_bundle):
        model, trace = train(small_bundle.train_x, small_bundle.train_z, TrainConfig(lam=1e6))
        np.testing.assert_array_equal(model.m, np.zeros_like(model.m))
        assert trace.records[trace.best_iteration].objective == pytest.approx(2 * math.log(2))
        assert trace.converged

    def test_trace_starts_at_zero_model(self, small_bundle):
        _, trace = train(small_bundle.train_x, small_bundle.train_z, TrainConfig(lam=1e-2, max_iters=5))
        first = trace.records[0]
        assert first.iteration == 0
        assert first.objective == pytest.approx(2 * math.log(2))
        assert first.nuclear == 0.0 and first.rank == 0
        assert trace.records[1].momentum == 0.0
        assert trace.iterations <= 5
        assert len(trace.to_rows()[0]) == len(TRACE_COLUMNS)

    def test_best_objective_nonincreasing(self, benchmark_run):
        _, trace = benchmark_run
        assert np.all(np.diff(trace.best_objectives) <= 0)
        assert trace.best_objectives[-1] == trace.objectives[trace.best_iteration]

    def test_deterministic(self, small_bundle):
        cfg = TrainConfig(lam=1e-2, max_iters=60)
        m1, t1 = train(small_bundle.train_x, small_bundle.train_z, cfg)
        m2, t2 = train(small_bundle.train_x, small_bundle.train_z, cfg)
        assert t1.to_rows() == t2.to_rows()
        np.testing.assert_array_equal(m1.m, m2.m)

    def test_plain_gradient_has_no_momentum(self, small_bundle):
        cfg = TrainConfig(lam=1e-2, max_iters=20, accelerate=False)
        model, trace = train(small_bundle.train_x, small_bundle.train_z, cfg)
        assert all(r.momentum == 0.0 for r in trace.records)
        assert model.metadata['method'] == 'PG'

    def test_non_convergence_is_not_an_error(self, small_bundle):
        _, trace = train(small_bundle.train_x, small_bundle.train_z,
                         TrainConfig(lam=1e-3, max_iters=3, rel_tol=1e-15))
        assert trace.iterations == 3
        assert not trace.converged


class TestTrain:

    def test_metadata(self, benchmark_run, benchmark_bundle):
        model, trace = benchmark_run
        assert model.lam == BENCHMARK_LAMBDA
        assert model.metadata['method'] == 'APG'
        assert model.metadata['iterations'] == str(trace.iterations)
        assert model.input_dims == (benchmark_bundle.train_x.dim, benchmark_bundle.train_z.dim)

    def test_rank_shrinks_with_lambda(self, benchmark_bundle, benchmark_run):
        small_lambda_model, _ = benchmark_run
        large_lambda_model, _ = train(benchmark_bundle.train_x, benchmark_bundle.train_z, TrainConfig(lam=1e-1))
        assert large_lambda_model.rank <= small_lambda_model.rank
        assert large_lambda_model.rank < min(large_lambda_model.m.shape)

    def test_pca_projections_travel_with_model(self, small_bundle):
        model, _ = train(small_bundle.train_x, small_bundle.train_z, TrainConfig(lam=1e-2, pca_energy=0.99))
        assert model.pca_x is not None and model.pca_z is not None
        assert model.m.shape == (model.pca_x.k, model.pca_z.k)
        assert model.input_dims == (small_bundle.train_x.dim, small_bundle.train_z.dim)
        assert model.project_x(small_bundle.test_x.features).shape == (model.pca_x.k, small_bundle.test_x.count)

    def test_rejects_degenerate_supervision(self):
        x_mod = LabeledModality(np.ones((2, 2)), [0, 0])
        z_mod = LabeledModality(np.ones((2, 2)), [1, 1])
        with pytest.raises(ValidationError):
            train(x_mod, z_mod, TrainConfig(lam=1e-3))

    def test_model_dimension_check(self):
        model = SimilarityModel.zeros(3, 2)
        with pytest.raises(ValidationError):
            model.project_x(np.ones((4, 1)))


@pytest.fixture(scope='module')
def reference_objective(benchmark_bundle):
    ctx = benchmark_context(benchmark_bundle)
    _, trace = minimize(ctx, TrainConfig(lam=BENCHMARK_LAMBDA, max_iters=20000, rel_tol=1e-16))
    return float(trace.best_objectives[-1])


@pytest.mark.slow
class TestConvergence:

    def test_accelerated_matches_long_plain_run(self, benchmark_bundle):
        ctx = benchmark_context(benchmark_bundle)
        _, fast = minimize(ctx, TrainConfig(lam=BENCHMARK_LAMBDA, max_iters=500, rel_tol=1e-16))
        _, slow = minimize(ctx, TrainConfig(lam=BENCHMARK_LAMBDA, max_iters=25000, rel_tol=1e-16,
                                            accelerate=False))
        f_fast = float(fast.best_objectives[-1])
        f_slow = float(slow.best_objectives[-1])
        assert abs(f_fast - f_slow) / max(1.0, abs(f_slow)) < 1e-4

    def test_rate_envelope(self, benchmark_bundle, reference_objective):
        ctx = benchmark_context(benchmark_bundle)
        _, trace = minimize(ctx, TrainConfig(lam=BENCHMARK_LAMBDA, max_iters=40, rel_tol=1e-16))
        best = trace.best_objectives
        assert best[40] - reference_objective <= 0.1 * (best[10] - reference_objective)
