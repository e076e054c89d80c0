#!/usr/bin/env python3
"""
Nuclear-norm proximal operator (singular value soft-thresholding) and an
executable check of its optimality conditions.

    svt(L, g) = argmin_M 1/2 ||M - L||_F^2 + g ||M||_*
              = U max(S - g, 0) V^T         for L = U S V^T
"""

from dataclasses import dataclass

import numpy as np

from config import OPTIMALITY_TOL, SVT_GUARD
from errors import ValidationError
from linalg import SvdResult, as_matrix, svd


def svt_decomposed(l, gamma: float) -> SvdResult:
    """Thin factors of svt(l, gamma); only components with sigma > gamma survive."""
    if gamma < 0:
        raise ValidationError(f'threshold must be >= 0, got {gamma}')
    s = svd(l)
    shrunk = s.sigma - gamma
    keep = shrunk > SVT_GUARD
    return SvdResult(u=s.u[:, keep], sigma=shrunk[keep], v=s.v[:, keep])


def svt(l, gamma: float) -> np.ndarray:
    """Singular value soft-thresholding of l at gamma."""
    arr = as_matrix(l, 'svt input')
    factors = svt_decomposed(arr, gamma)
    if factors.rank == 0:
        return np.zeros_like(arr)
    return factors.reconstruct()


@dataclass(frozen=True)
class OptimalityReport:
    """
    Residuals of L - C = gamma (U0 V0^T + S) for a candidate C with
    column/row spaces U0, V0. The candidate is the prox solution iff
    U0^T S = 0, S V0 = 0 and ||S||_2 <= 1.
    """
    passed: bool
    left_residual: float     # ||U0^T S||_F
    right_residual: float    # ||S V0||_F
    spectral_norm: float     # ||S||_2
    rank: int                # rank of the candidate
    tolerance: float

    def to_dict(self) -> dict:
        return {
            'passed': self.passed,
            'left_residual': self.left_residual,
            'right_residual': self.right_residual,
            'spectral_norm': self.spectral_norm,
            'rank': self.rank,
            'tolerance': self.tolerance,
        }


def check_svt_optimality(
    l,
    gamma: float,
    candidate,
    tol: float = OPTIMALITY_TOL,
) -> OptimalityReport:
    """Verify 0 in C - L + gamma * subgrad ||C||_* for the candidate C."""
    if gamma <= 0:
        raise ValidationError(f'optimality check needs gamma > 0, got {gamma}')
    l = as_matrix(l, 'L')
    c = as_matrix(candidate, 'candidate')
    if l.shape != c.shape:
        raise ValidationError(f'candidate shape {c.shape} does not match L shape {l.shape}')

    factors = svd(c)
    u0, v0 = factors.u, factors.v
    s = (l - c) / gamma - u0 @ v0.T

    left = float(np.linalg.norm(u0.T @ s)) if factors.rank else 0.0
    right = float(np.linalg.norm(s @ v0)) if factors.rank else 0.0
    spectral = float(np.linalg.norm(s, 2)) if s.size else 0.0

    passed = left <= tol and right <= tol and spectral <= 1.0 + tol
    return OptimalityReport(
        passed=passed,
        left_residual=left,
        right_residual=right,
        spectral_norm=spectral,
        rank=factors.rank,
        tolerance=tol,
    )
