#!/usr/bin/env python3
"""Must-link / cannot-link pair supervision between two labeled modalities."""

from dataclasses import dataclass

import numpy as np

from errors import ValidationError
from linalg import as_matrix


@dataclass(frozen=True)
class LabeledModality:
    """Feature matrix (dim x count) plus one integer class label per sample."""
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        features = as_matrix(self.features, 'features')
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ValidationError(f'labels must be 1-D, got shape {labels.shape}')
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise ValidationError('labels must be integers')
        labels = labels.astype(np.int64)
        if labels.size != features.shape[1]:
            raise ValidationError(
                f'{labels.size} labels for {features.shape[1]} samples'
            )
        if labels.size == 0:
            raise ValidationError('modality has no samples')
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'labels', labels)

    @property
    def dim(self) -> int:
        return int(self.features.shape[0])

    @property
    def count(self) -> int:
        return int(self.features.shape[1])

    @property
    def classes(self) -> set[int]:
        return set(int(c) for c in np.unique(self.labels))


@dataclass(frozen=True)
class PairSupervision:
    """
    Sign matrix y (m x n, +1 same class / -1 different class) and weight
    matrix w giving each side unit total mass.
    """
    y: np.ndarray
    w: np.ndarray
    positives: int
    negatives: int

    @property
    def shape(self) -> tuple[int, int]:
        return self.y.shape

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.w))


def build_supervision(
    a: LabeledModality,
    b: LabeledModality,
    require_both: bool = True,
) -> PairSupervision:
    """
    All m*n cross pairs: y_ij = +1 iff labels match. Positive pairs weigh
    1/positives, negative pairs 1/negatives.

    With require_both=False a one-sided supervision (only must-link or only
    cannot-link pairs) is returned instead of rejected; the empty side
    simply carries no weight.
    """
    same = a.labels[:, None] == b.labels[None, :]
    positives = int(np.count_nonzero(same))
    negatives = int(same.size - positives)
    if require_both:
        if positives == 0:
            raise ValidationError('no must-link pairs: the two modalities share no class label')
        if negatives == 0:
            raise ValidationError('no cannot-link pairs: every sample has the same class label')

    y = np.where(same, 1.0, -1.0)
    w = np.zeros(same.shape)
    if positives:
        w[same] = 1.0 / positives
    if negatives:
        w[~same] = 1.0 / negatives
    return PairSupervision(y=y, w=w, positives=positives, negatives=negatives)


if __name__ == '__main__':
    print('Testing pairs.py')
    print('=' * 40)

    a = LabeledModality(np.eye(2), [0, 1])
    sup = build_supervision(a, LabeledModality(np.ones((3, 2)), [0, 1]))
    assert np.array_equal(sup.y, [[1, -1], [-1, 1]]), 'sign matrix failed'
    assert np.allclose(sup.w, 0.5), 'weights failed'
    print('[OK] balanced 2x2 supervision')

    try:
        build_supervision(a, LabeledModality(np.ones((3, 1)), [7]))
        print('[FAIL] no-positive supervision accepted')
    except ValidationError as e:
        print(f'[OK] rejected: {e}')

    print('=' * 40)
    print('Tests complete')
