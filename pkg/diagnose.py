#!/usr/bin/env python3
"""
lrbs diagnostic report.
Runs the numerical self-checks and writes the results to a file.

Run: python3 diagnose.py   (or: python3 lrbs.py check)
Output: LRBS_DIAGNOSTIC_FILE (default /tmp/lrbs_diagnostic.txt)
"""

import sys
import time
from pathlib import Path

import numpy as np

from config import DIAGNOSTIC_FILE, EXIT_NUMERICAL, EXIT_OK, OPTIMALITY_TOL
from data import SyntheticSpec, generate_synthetic
from linalg import singular_values
from loss import LossContext, gradient_smooth, objective_smooth
from optimizer import TrainConfig, train
from pairs import LabeledModality, build_supervision
from prox import check_svt_optimality, svt
from storage import save_text


class Report:
    """Collects [OK]/[FAIL] lines for console and file."""

    def __init__(self):
        self.lines = []
        self.failures = 0

    def log(self, msg: str = '') -> None:
        print(msg)
        self.lines.append(msg)

    def section(self, title: str) -> None:
        self.log('')
        self.log('=' * 60)
        self.log(f'  {title}')
        self.log('=' * 60)

    def check(self, name: str, condition: bool, details: str = '') -> bool:
        status = '[OK]' if condition else '[FAIL]'
        if not condition:
            self.failures += 1
        self.log(f'{status} {name}')
        if details:
            for line in details.split('\n')[:10]:
                self.log(f'      {line}')
        return condition


def random_context(rng: np.random.Generator) -> LossContext:
    """Small random loss instance with both pair kinds present."""
    d1, d2 = rng.integers(2, 9, size=2)
    m, n = rng.integers(2, 11, size=2)
    x_labels = rng.integers(0, 3, size=m)
    z_labels = rng.integers(0, 3, size=n)
    x_labels[0], z_labels[0] = 0, 0
    x_labels[1], z_labels[1] = 1, 2
    x_mod = LabeledModality(rng.standard_normal((d1, m)), x_labels)
    z_mod = LabeledModality(rng.standard_normal((d2, n)), z_labels)
    return LossContext(x=x_mod.features, z=z_mod.features, sup=build_supervision(x_mod, z_mod))


def finite_difference_gradient(ctx: LossContext, q: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of the smooth objective, entry by entry."""
    grad = np.zeros_like(q)
    for idx in np.ndindex(q.shape):
        e = np.zeros_like(q)
        e[idx] = h
        grad[idx] = (objective_smooth(ctx, q + e) - objective_smooth(ctx, q - e)) / (2 * h)
    return grad


def check_gradient(report: Report, instances: int = 50, seed: int = 0) -> None:
    report.section('1. GRADIENT vs FINITE DIFFERENCES')
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        ctx = random_context(rng)
        q = rng.standard_normal(ctx.model_shape) * 0.5
        analytic = gradient_smooth(ctx, q)
        numeric = finite_difference_gradient(ctx, q)
        scale = max(np.linalg.norm(numeric), 1e-12)
        worst = max(worst, float(np.linalg.norm(analytic - numeric) / scale))
    report.check(f'{instances} random instances, worst relative error {worst:.2e}', worst < 1e-5)


def check_svt(report: Report, instances: int = 50, seed: int = 1) -> None:
    report.section('2. SINGULAR VALUE THRESHOLDING')
    rng = np.random.default_rng(seed)
    worst_sigma = 0.0
    failed = []
    for i in range(instances):
        rows, cols = rng.integers(2, 9, size=2)
        l = rng.standard_normal((rows, cols))
        gamma = float(rng.uniform(0.1, 2.0))
        out = svt(l, gamma)
        expected = np.maximum(singular_values(l) - gamma, 0.0)
        worst_sigma = max(worst_sigma, float(np.max(np.abs(singular_values(out) - expected))))
        result = check_svt_optimality(l, gamma, out)
        if not result.passed:
            failed.append(i)
    report.check(f'singular values shrink by gamma (worst {worst_sigma:.2e})', worst_sigma < 1e-8)
    report.check(
        f'optimality conditions hold within {OPTIMALITY_TOL}',
        not failed,
        f'failing instances: {failed}' if failed else '',
    )


def check_acceleration(report: Report) -> None:
    report.section('3. ACCELERATED vs PLAIN PROXIMAL GRADIENT')
    spec = SyntheticSpec(classes=3, latent_dim=2, dim_x=6, dim_z=5,
                         per_class_train=5, per_class_test=2, noise_sigma=0.3, seed=7)
    bundle = generate_synthetic(spec)
    started = time.monotonic()
    _, fast = train(bundle.train_x, bundle.train_z,
                    TrainConfig(lam=1e-2, max_iters=300, rel_tol=1e-14))
    _, slow = train(bundle.train_x, bundle.train_z,
                    TrainConfig(lam=1e-2, max_iters=6000, rel_tol=1e-14, accelerate=False))
    f_fast = float(fast.best_objectives[-1])
    f_slow = float(slow.best_objectives[-1])
    gap = abs(f_fast - f_slow) / max(1.0, abs(f_slow))
    report.check(
        f'APG@300 within 1e-4 of PG@6000 (gap {gap:.2e}, {time.monotonic() - started:.1f}s)',
        gap < 1e-4,
        f'APG best {f_fast:.10f}\nPG best  {f_slow:.10f}',
    )
    monotone = bool(np.all(np.diff(fast.best_objectives) <= 0))
    report.check('best-so-far objective is nonincreasing', monotone)


def run_diagnostics(output: Path = DIAGNOSTIC_FILE) -> int:
    """Run all checks, write the report, return the exit code."""
    report = Report()
    report.log('lrbs Diagnostic Report')
    report.log(f'Python: {sys.version.split()[0]}  numpy: {np.__version__}')

    check_gradient(report)
    check_svt(report)
    check_acceleration(report)

    report.section('SUMMARY')
    report.log(f'{report.failures} check(s) failed' if report.failures else 'All checks passed')
    save_text(Path(output), '\n'.join(report.lines) + '\n')
    print(f'\nReport written to {output}')
    return EXIT_NUMERICAL if report.failures else EXIT_OK


if __name__ == '__main__':
    sys.exit(run_diagnostics())
