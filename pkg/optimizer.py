#!/usr/bin/env python3
"""
Accelerated proximal gradient training of the bilinear similarity matrix.

Each iteration takes a gradient step on the logistic loss from the search
point Q_t, applies singular value thresholding at lam * eta_t, and
extrapolates

    alpha_{t+1} = (1 + sqrt(1 + 4 alpha_t^2)) / 2
    Q_{t+1} = M_{t+1} + ((alpha_t - 1) / alpha_{t+1}) (M_{t+1} - M_t)

The step size eta_t is found by backtracking on the usual majorization
test and grows by step_growth after each accepted step.
"""

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from config import (
    DEFAULT_BACKTRACK_SHRINK,
    DEFAULT_ETA0,
    DEFAULT_MAX_ITERS,
    DEFAULT_REL_TOL,
    DEFAULT_STEP_GROWTH,
    LOG_EVERY,
    MIN_STEP,
)
from errors import NumericalError, ValidationError
from formatting import format_sci
from linalg import PcaProjection, as_matrix, numerical_rank, pca_apply, pca_fit, rank_from_sigma, singular_values
from loss import LossContext, gradient_smooth, objective_smooth
from pairs import LabeledModality, build_supervision
from prox import svt

log = logging.getLogger('lrbs.optimizer')


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters. Validated on construction."""
    lam: float
    max_iters: int = DEFAULT_MAX_ITERS
    rel_tol: float = DEFAULT_REL_TOL
    eta0: float = DEFAULT_ETA0
    backtrack_shrink: float = DEFAULT_BACKTRACK_SHRINK
    step_growth: float = DEFAULT_STEP_GROWTH
    accelerate: bool = True
    pca_energy: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValidationError(f'lambda must be a finite value >= 0, got {self.lam}')
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValidationError(f'max_iters must be a positive integer, got {self.max_iters}')
        if not self.rel_tol > 0:
            raise ValidationError(f'rel_tol must be > 0, got {self.rel_tol}')
        if not self.eta0 > 0:
            raise ValidationError(f'eta0 must be > 0, got {self.eta0}')
        if not (0 < self.backtrack_shrink < 1):
            raise ValidationError(f'backtrack_shrink must be in (0, 1), got {self.backtrack_shrink}')
        if not self.step_growth >= 1:
            raise ValidationError(f'step_growth must be >= 1, got {self.step_growth}')
        if self.pca_energy is not None and not (0 < self.pca_energy <= 1):
            raise ValidationError(f'pca_energy must be in (0, 1], got {self.pca_energy}')

    def to_dict(self) -> dict:
        return asdict(self)


def config_hash(cfg: TrainConfig) -> str:
    """SHA256 over the normalized config, for provenance metadata."""
    combined = json.dumps(cfg.to_dict(), sort_keys=True)
    return hashlib.sha256(combined.encode('utf-8')).hexdigest()


@dataclass(frozen=True)
class IterationRecord:
    """One row of the training trace."""
    iteration: int
    objective: float
    smooth: float
    nuclear: float
    eta: float
    momentum: float
    rank: int
    best_objective: float


TRACE_COLUMNS = ('iter', 'objective', 'smooth', 'nuclear', 'eta', 'momentum', 'rank')


@dataclass
class TrainTrace:
    """Per-iteration history of a run. Iteration 0 is the M = 0 starting point."""
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    best_iteration: int = 0

    def append(self, record: IterationRecord) -> None:
        self.records.append(record)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def best_objectives(self) -> np.ndarray:
        return np.array([r.best_objective for r in self.records])

    @property
    def iterations(self) -> int:
        return len(self.records) - 1

    def to_rows(self) -> list[tuple]:
        """Rows for the trace CSV, columns TRACE_COLUMNS."""
        return [
            (r.iteration, r.objective, r.smooth, r.nuclear, r.eta, r.momentum, r.rank)
            for r in self.records
        ]


@dataclass(frozen=True)
class SimilarityModel:
    """
    Learned bilinear matrix M (d1 x d2) with optional PCA projections.
    Scores are x^T M z on the projected features.
    """
    m: np.ndarray
    lam: float = 0.0
    pca_x: Optional[PcaProjection] = None
    pca_z: Optional[PcaProjection] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        m = as_matrix(self.m, 'model matrix')
        if self.pca_x is not None and self.pca_x.k != m.shape[0]:
            raise ValidationError(f'x projection has {self.pca_x.k} components, M has {m.shape[0]} rows')
        if self.pca_z is not None and self.pca_z.k != m.shape[1]:
            raise ValidationError(f'z projection has {self.pca_z.k} components, M has {m.shape[1]} columns')
        object.__setattr__(self, 'm', m)

    @classmethod
    def zeros(cls, dim_x: int, dim_z: int) -> 'SimilarityModel':
        """Untrained M = 0 model: every score ties."""
        return cls(m=np.zeros((dim_x, dim_z)), metadata={'init': 'zeros'})

    @property
    def input_dims(self) -> tuple[int, int]:
        """Raw feature dimensions the model accepts."""
        dx = self.pca_x.dim if self.pca_x is not None else self.m.shape[0]
        dz = self.pca_z.dim if self.pca_z is not None else self.m.shape[1]
        return dx, dz

    @property
    def rank(self) -> int:
        return numerical_rank(self.m)

    def project_x(self, x) -> np.ndarray:
        return self._project(x, self.pca_x, self.input_dims[0], 'x')

    def project_z(self, z) -> np.ndarray:
        return self._project(z, self.pca_z, self.input_dims[1], 'z')

    @staticmethod
    def _project(features, pca: Optional[PcaProjection], dim: int, side: str) -> np.ndarray:
        arr = as_matrix(features, f'{side} features')
        if arr.shape[0] != dim:
            raise ValidationError(f'model expects {dim}-dim {side} features, got {arr.shape[0]}')
        if pca is None:
            return arr
        return pca_apply(pca, arr)


def momentum_sequence(alpha_t: float) -> float:
    """alpha_{t+1} = (1 + sqrt(1 + 4 alpha_t^2)) / 2, starting from alpha_1 = 1."""
    if alpha_t < 1:
        raise ValidationError(f'alpha must be >= 1, got {alpha_t}')
    return (1.0 + math.sqrt(1.0 + 4.0 * alpha_t * alpha_t)) / 2.0


class ProxStep(NamedTuple):
    m_next: np.ndarray
    eta: float


def backtracking_step(
    ctx: LossContext,
    q,
    eta: float,
    lam: float,
    shrink: float = DEFAULT_BACKTRACK_SHRINK,
) -> ProxStep:
    """
    Proximal gradient step from q, shrinking eta until

        l(M) <= l(q) + <grad l(q), M - q> + ||M - q||_F^2 / (2 eta)

    holds for M = svt(q - eta grad l(q), lam eta).
    """
    if not eta > 0:
        raise ValidationError(f'step size must be > 0, got {eta}')
    if lam < 0:
        raise ValidationError(f'lambda must be >= 0, got {lam}')
    q = ctx.check_model(q, 'Q')
    grad = gradient_smooth(ctx, q)
    loss_q = objective_smooth(ctx, q)
    slack = 1e-12 * max(1.0, abs(loss_q))

    while eta >= MIN_STEP:
        m_next = svt(q - eta * grad, lam * eta)
        delta = m_next - q
        bound = loss_q + float(np.sum(grad * delta)) + float(np.sum(delta * delta)) / (2.0 * eta)
        if objective_smooth(ctx, m_next) <= bound + slack:
            return ProxStep(m_next=m_next, eta=eta)
        eta *= shrink

    raise NumericalError(
        f'backtracking step size fell below {MIN_STEP} without satisfying the majorization test'
    )


def minimize(ctx: LossContext, cfg: TrainConfig) -> tuple[np.ndarray, TrainTrace]:
    """
    Run proximal gradient from M = 0 on a prepared loss context.
    Returns the best-objective iterate and the trace.
    """
    d1, d2 = ctx.model_shape
    m_prev = np.zeros((d1, d2))
    q = m_prev
    alpha = 1.0
    eta = cfg.eta0

    smooth = objective_smooth(ctx, m_prev)
    f_prev = smooth
    best_m, best_f = m_prev, f_prev

    trace = TrainTrace()
    trace.append(IterationRecord(0, f_prev, smooth, 0.0, eta, 0.0, 0, best_f))

    for t in range(1, cfg.max_iters + 1):
        m, eta_used = backtracking_step(ctx, q, eta, cfg.lam, cfg.backtrack_shrink)

        sigma = singular_values(m)
        nuclear = float(np.sum(sigma))
        smooth = objective_smooth(ctx, m)
        f = smooth + cfg.lam * nuclear
        if not math.isfinite(f):
            raise NumericalError(f'objective became non-finite at iteration {t}')
        rank = rank_from_sigma(sigma)

        alpha_next = momentum_sequence(alpha)
        momentum = (alpha - 1.0) / alpha_next if cfg.accelerate else 0.0
        q = m + momentum * (m - m_prev)

        if f < best_f:
            best_m, best_f = m, f
            trace.best_iteration = t
        trace.append(IterationRecord(t, f, smooth, nuclear, eta_used, momentum, rank, best_f))

        if t % LOG_EVERY == 0:
            log.debug(f'iter {t}: f={format_sci(f)} best={format_sci(best_f)} eta={format_sci(eta_used)} rank={rank}')

        change = abs(f - f_prev) / max(1.0, abs(f_prev))
        m_prev, f_prev = m, f
        alpha = alpha_next
        eta = eta_used * cfg.step_growth
        if change < cfg.rel_tol:
            trace.converged = True
            break

    return best_m, trace


def train(
    x_mod: LabeledModality,
    z_mod: LabeledModality,
    cfg: TrainConfig,
    name: str = '',
) -> tuple[SimilarityModel, TrainTrace]:
    """
    Fit the similarity model on two labeled training modalities.

    With cfg.pca_energy set, PCA is fit on each training modality and the
    projections travel with the model.
    """
    supervision = build_supervision(x_mod, z_mod)

    pca_x = pca_z = None
    x, z = x_mod.features, z_mod.features
    if cfg.pca_energy is not None:
        pca_x = pca_fit(x, cfg.pca_energy)
        pca_z = pca_fit(z, cfg.pca_energy)
        x, z = pca_apply(pca_x, x), pca_apply(pca_z, z)
        log.info(f'PCA at energy {cfg.pca_energy}: x {x_mod.dim} -> {pca_x.k}, z {z_mod.dim} -> {pca_z.k}')

    ctx = LossContext(x=x, z=z, sup=supervision)
    method = 'APG' if cfg.accelerate else 'PG'
    log.info(
        f'Training {method}: {x_mod.count} x-samples, {z_mod.count} z-samples, '
        f'M {ctx.model_shape[0]}x{ctx.model_shape[1]}, lambda={cfg.lam}, '
        f'{supervision.positives} positive / {supervision.negatives} negative pairs'
    )

    best_m, trace = minimize(ctx, cfg)
    best = trace.records[trace.best_iteration]
    status = 'converged' if trace.converged else 'stopped at max_iters'
    log.info(
        f'{status} after {trace.iterations} iterations: best objective '
        f'{format_sci(best.objective)} at iteration {trace.best_iteration}, rank {best.rank}'
    )

    metadata = {
        'dataset': name,
        'config_hash': config_hash(cfg),
        'method': method,
        'dim_x': str(ctx.model_shape[0]),
        'dim_z': str(ctx.model_shape[1]),
        'iterations': str(trace.iterations),
        'converged': str(trace.converged).lower(),
    }
    model = SimilarityModel(m=best_m, lam=cfg.lam, pca_x=pca_x, pca_z=pca_z, metadata=metadata)
    return model, trace
