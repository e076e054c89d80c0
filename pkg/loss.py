#!/usr/bin/env python3
"""
Weighted logistic pair loss of a bilinear similarity x_i^T M z_j.

    l(M) = sum_ij w_ij * log(1 + exp(-y_ij * x_i^T M z_j))
    grad l(Q) = -X T Z^T,   T_ij = w_ij * y_ij / (1 + exp(y_ij * x_i^T Q z_j))

Both are evaluated in overflow-safe form.
"""

from dataclasses import dataclass

import numpy as np

from errors import ValidationError
from linalg import as_matrix, nuclear_norm
from pairs import PairSupervision


def softplus(t: np.ndarray) -> np.ndarray:
    """log(1 + exp(t)) as max(t, 0) + log1p(exp(-|t|))."""
    t = np.asarray(t, dtype=np.float64)
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def logistic(t: np.ndarray) -> np.ndarray:
    """1 / (1 + exp(-t)) without overflow for large |t|."""
    t = np.asarray(t, dtype=np.float64)
    e = np.exp(-np.abs(t))
    return np.where(t >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


@dataclass(frozen=True)
class LossContext:
    """Training features x (d1 x m), z (d2 x n) and their pair supervision (m x n)."""
    x: np.ndarray
    z: np.ndarray
    sup: PairSupervision

    def __post_init__(self):
        x = as_matrix(self.x, 'x features')
        z = as_matrix(self.z, 'z features')
        m, n = self.sup.shape
        if x.shape[1] != m or z.shape[1] != n:
            raise ValidationError(
                f'supervision is {m}x{n} but features have {x.shape[1]} and {z.shape[1]} samples'
            )
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'z', z)

    @property
    def model_shape(self) -> tuple[int, int]:
        return (self.x.shape[0], self.z.shape[0])

    def check_model(self, m: np.ndarray, name: str = 'M') -> np.ndarray:
        arr = as_matrix(m, name)
        if arr.shape != self.model_shape:
            raise ValidationError(f'{name} must be {self.model_shape}, got {arr.shape}')
        return arr


def score_matrix(x: np.ndarray, m: np.ndarray, z: np.ndarray) -> np.ndarray:
    """All bilinear scores x_i^T M z_j as an m x n matrix."""
    return x.T @ m @ z


def objective_smooth(ctx: LossContext, m) -> float:
    """The weighted logistic loss l(M)."""
    m = ctx.check_model(m)
    margins = ctx.sup.y * score_matrix(ctx.x, m, ctx.z)
    return float(np.sum(ctx.sup.w * softplus(-margins)))


def objective_full(ctx: LossContext, m, lam: float) -> float:
    """f(M) = l(M) + lam * ||M||_*"""
    if lam < 0:
        raise ValidationError(f'lambda must be >= 0, got {lam}')
    m = ctx.check_model(m)
    return objective_smooth(ctx, m) + lam * nuclear_norm(m)


def gradient_smooth(ctx: LossContext, q) -> np.ndarray:
    """Gradient of l at Q, shape d1 x d2."""
    q = ctx.check_model(q, 'Q')
    margins = ctx.sup.y * score_matrix(ctx.x, q, ctx.z)
    # 1 / (1 + exp(margin)) == logistic(-margin)
    t = ctx.sup.w * ctx.sup.y * logistic(-margins)
    return -(ctx.x @ t @ ctx.z.T)
