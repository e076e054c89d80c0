#!/usr/bin/env python3
"""
Dense linear algebra for lrbs: thin SVD, nuclear norm, energy-threshold PCA.

Matrices are plain float64 numpy arrays. Feature matrices are laid out
dim x samples (one sample per column) throughout the package.
"""

from dataclasses import dataclass

import numpy as np

from config import RANK_TOL
from errors import NumericalError, ValidationError


def as_matrix(a, name: str = 'matrix') -> np.ndarray:
    """Coerce to a finite 2-D float64 array or raise."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f'{name} must be 2-D, got shape {arr.shape}')
    if not np.all(np.isfinite(arr)):
        bad = int(np.size(arr) - np.count_nonzero(np.isfinite(arr)))
        raise NumericalError(f'{name} has {bad} non-finite entries')
    return arr


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD a = u @ diag(sigma) @ v.T with r retained components."""
    u: np.ndarray       # d1 x r, orthonormal columns
    sigma: np.ndarray   # r, nonincreasing, >= 0
    v: np.ndarray       # d2 x r, orthonormal columns

    @property
    def rank(self) -> int:
        return int(self.sigma.size)

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


def svd(a) -> SvdResult:
    """
    Thin SVD with numerical-rank truncation.

    Singular values <= RANK_TOL * sigma_max are dropped, so the zero matrix
    has rank 0 and empty factors.
    """
    arr = as_matrix(a, 'svd input')
    u, sigma, vt = np.linalg.svd(arr, full_matrices=False)
    keep = rank_from_sigma(sigma)
    return SvdResult(u=u[:, :keep], sigma=sigma[:keep], v=vt[:keep].T)


def rank_from_sigma(sigma: np.ndarray) -> int:
    """Numerical rank from nonincreasing singular values."""
    if sigma.size == 0 or sigma[0] <= 0.0:
        return 0
    return int(np.count_nonzero(sigma > RANK_TOL * sigma[0]))


def singular_values(a) -> np.ndarray:
    """All singular values, nonincreasing, no truncation."""
    return np.linalg.svd(as_matrix(a, 'matrix'), compute_uv=False)


def nuclear_norm(a) -> float:
    """Sum of singular values."""
    return float(np.sum(singular_values(a)))


def numerical_rank(a) -> int:
    """Count of singular values above the relative rank tolerance."""
    return rank_from_sigma(singular_values(a))


@dataclass(frozen=True)
class PcaProjection:
    """Centering vector plus an orthonormal basis of the top-k principal directions."""
    mean: np.ndarray             # length dim
    basis: np.ndarray            # dim x k
    eigenvalues: np.ndarray      # length k, retained sample-covariance eigenvalues
    total_variance: float        # sum of all covariance eigenvalues
    retained_energy: float       # sum(eigenvalues) / total_variance, in (0, 1]

    @property
    def k(self) -> int:
        return int(self.basis.shape[1])

    @property
    def dim(self) -> int:
        return int(self.mean.size)


def pca_fit(x, energy: float) -> PcaProjection:
    """
    Fit PCA on x (dim x samples) keeping the smallest k whose eigenvalue
    mass reaches the requested energy fraction.
    """
    if not (0.0 < energy <= 1.0):
        raise ValidationError(f'PCA energy must be in (0, 1], got {energy}')
    arr = as_matrix(x, 'PCA input')
    n_samples = arr.shape[1]
    if n_samples < 2:
        raise ValidationError(f'PCA needs at least 2 samples, got {n_samples}')

    mean = arr.mean(axis=1)
    centered = arr - mean[:, None]
    decomposition = svd(centered)
    if decomposition.rank == 0:
        raise ValidationError('PCA input has zero variance')

    eigenvalues = decomposition.sigma ** 2 / (n_samples - 1)
    total = float(np.sum(eigenvalues))
    cumulative = np.cumsum(eigenvalues) / total
    # Smallest k with cumulative[k-1] >= energy, tolerant to rounding at energy = 1
    k = int(np.argmax(cumulative >= energy - 1e-12)) + 1

    return PcaProjection(
        mean=mean,
        basis=decomposition.u[:, :k].copy(),
        eigenvalues=eigenvalues[:k].copy(),
        total_variance=total,
        retained_energy=float(min(1.0, cumulative[k - 1])),
    )


def pca_apply(p: PcaProjection, x) -> np.ndarray:
    """Project x (dim x samples) to k x samples: basis.T @ (x - mean)."""
    arr = as_matrix(x, 'PCA apply input')
    if arr.shape[0] != p.dim:
        raise ValidationError(f'PCA expects {p.dim}-dim samples, got {arr.shape[0]}')
    return p.basis.T @ (arr - p.mean[:, None])


def pca_reconstruct(p: PcaProjection, y) -> np.ndarray:
    """Map projected k x samples back to the input space."""
    arr = as_matrix(y, 'PCA coordinates')
    if arr.shape[0] != p.k:
        raise ValidationError(f'PCA coordinates must have {p.k} rows, got {arr.shape[0]}')
    return p.basis @ arr + p.mean[:, None]


if __name__ == '__main__':
    print('Testing linalg.py')
    print('=' * 40)

    s = svd(np.diag([3.0, 1.0]))
    assert np.allclose(s.sigma, [3.0, 1.0]), 'diag singular values failed'
    print('[OK] svd diag(3, 1)')

    rng = np.random.default_rng(0)
    a = rng.standard_normal((6, 4))
    s = svd(a)
    err = np.linalg.norm(s.reconstruct() - a) / np.linalg.norm(a)
    assert err < 1e-8, f'reconstruction error {err}'
    print(f'[OK] svd reconstruction ({err:.1e})')

    line = np.outer([1.0, 2.0, -1.0], np.arange(1, 9, dtype=float))
    p = pca_fit(line, 0.99)
    assert p.k == 1, f'expected k=1, got {p.k}'
    print('[OK] pca_fit on a line')

    print('=' * 40)
    print('All tests passed')
