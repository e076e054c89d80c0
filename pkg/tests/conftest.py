"""Shared fixtures: the seed-42 synthetic benchmark and a model trained on it."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from data import SyntheticSpec, generate_synthetic  # noqa: E402
from optimizer import TrainConfig, train  # noqa: E402

BENCHMARK_LAMBDA = 1e-3


@pytest.fixture(scope='session')
def benchmark_spec():
    return SyntheticSpec(
        classes=5,
        latent_dim=4,
        dim_x=30,
        dim_z=20,
        per_class_train=20,
        per_class_test=10,
        noise_sigma=0.3,
        seed=42,
    )


@pytest.fixture(scope='session')
def benchmark_bundle(benchmark_spec):
    return generate_synthetic(benchmark_spec)


@pytest.fixture(scope='session')
def benchmark_run(benchmark_bundle):
    """(model, trace) at lambda = 1e-3 with default settings."""
    return train(benchmark_bundle.train_x, benchmark_bundle.train_z, TrainConfig(lam=BENCHMARK_LAMBDA))


@pytest.fixture(scope='session')
def small_bundle():
    spec = SyntheticSpec(classes=3, latent_dim=2, dim_x=6, dim_z=5,
                         per_class_train=4, per_class_test=3, noise_sigma=0.2, seed=3)
    return generate_synthetic(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
