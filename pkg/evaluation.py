#!/usr/bin/env python3
"""
Cross-modal retrieval scoring and ranking metrics for lrbs.

Relevance is binary: a gallery item is relevant to a query iff they share a
class label. Rankings sort by descending score, ties by ascending gallery
index.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from config import (
    DEFAULT_SCOPES,
    METRICS_FILE,
    PR_CURVE_SUFFIX,
    RECALL_LEVELS,
    SCOPE_CURVE_SUFFIX,
)
from errors import ValidationError
from optimizer import SimilarityModel
from pairs import LabeledModality
from storage import save_csv_rows, save_json


class Direction(str, Enum):
    """Which modality issues the queries."""
    X_QUERIES_Z = 'x_queries_z'
    Z_QUERIES_X = 'z_queries_x'

    @property
    def report_key(self) -> str:
        return 'x_query' if self is Direction.X_QUERIES_Z else 'z_query'


@dataclass(frozen=True)
class RankedRetrieval:
    """Gallery ranking for one query."""
    query_index: int
    ranked_gallery: np.ndarray   # gallery indices, best first
    relevance: np.ndarray        # bool per ranked position
    scores: Optional[np.ndarray] = None  # scores in ranked order

    @property
    def relevant_count(self) -> int:
        return int(np.count_nonzero(self.relevance))

    @property
    def size(self) -> int:
        return int(self.relevance.size)


@dataclass
class MetricReport:
    """MAP, per-query AP and the two averaged curves for one query direction."""
    map: float
    per_query_ap: list[float]
    pr_curve: list[tuple[float, float]]
    scope_curve: list[tuple[int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            'map': self.map,
            'per_query_ap': list(self.per_query_ap),
            'pr_curve': [[r, p] for r, p in self.pr_curve],
            'scope_curve': [[s, p] for s, p in self.scope_curve],
        }


def score_all(
    model: SimilarityModel,
    queries,
    gallery,
    direction: Direction = Direction.X_QUERIES_Z,
) -> np.ndarray:
    """
    Bilinear scores of every query against every gallery item
    (n_queries x n_gallery). Raw features go through the model's PCA
    projections; the score is x^T M z whichever side queries.
    """
    direction = Direction(direction)
    if direction is Direction.X_QUERIES_Z:
        xq = model.project_x(queries)
        zg = model.project_z(gallery)
        return xq.T @ model.m @ zg
    zq = model.project_z(queries)
    xg = model.project_x(gallery)
    return zq.T @ model.m.T @ xg


def rank_gallery(
    scores,
    query_labels: Sequence[int],
    gallery_labels: Sequence[int],
) -> list[RankedRetrieval]:
    """Rank the gallery for each query row of the score matrix."""
    scores = np.asarray(scores, dtype=np.float64)
    query_labels = np.asarray(query_labels)
    gallery_labels = np.asarray(gallery_labels)
    if scores.shape != (query_labels.size, gallery_labels.size):
        raise ValidationError(
            f'score matrix {scores.shape} does not match {query_labels.size} queries '
            f'x {gallery_labels.size} gallery items'
        )

    index = np.arange(gallery_labels.size)
    retrievals = []
    for i, row in enumerate(scores):
        order = np.lexsort((index, -row))
        retrievals.append(RankedRetrieval(
            query_index=i,
            ranked_gallery=order,
            relevance=gallery_labels[order] == query_labels[i],
            scores=row[order],
        ))
    return retrievals


def average_precision(relevance) -> float:
    """AP = (1/T) sum_r P(r) rel(r) over the full list; 0 when nothing is relevant."""
    rel = np.asarray(relevance) != 0
    if rel.size == 0:
        raise ValidationError('average precision of an empty ranking')
    total = int(np.count_nonzero(rel))
    if total == 0:
        return 0.0
    precision = np.cumsum(rel) / np.arange(1, rel.size + 1)
    return float(np.sum(precision[rel]) / total)


def mean_average_precision(retrievals: Sequence[RankedRetrieval]) -> float:
    """Arithmetic mean of per-query AP."""
    if not retrievals:
        raise ValidationError('MAP of an empty query set')
    return float(np.mean([average_precision(r.relevance) for r in retrievals]))


def _interpolated_precision(relevance: np.ndarray, levels: np.ndarray) -> np.ndarray:
    total = int(np.count_nonzero(relevance))
    if total == 0:
        return np.zeros(levels.size)
    hits = np.cumsum(relevance)
    precision = hits / np.arange(1, relevance.size + 1)
    recall = hits / total
    # max precision over ranks whose recall reaches the level
    best_after = np.maximum.accumulate(precision[::-1])[::-1]
    first = np.searchsorted(recall, levels - 1e-12, side='left')
    return best_after[first]


def precision_recall_curve(
    retrievals: Sequence[RankedRetrieval],
    levels: Sequence[float] = RECALL_LEVELS,
) -> list[tuple[float, float]]:
    """Interpolated precision averaged over queries on a fixed recall grid."""
    if not retrievals:
        raise ValidationError('precision-recall curve of an empty query set')
    levels = np.asarray(levels, dtype=np.float64)
    stacked = np.array([_interpolated_precision(r.relevance, levels) for r in retrievals])
    mean = stacked.mean(axis=0)
    return [(float(level), float(p)) for level, p in zip(levels, mean)]


def precision_scope_curve(
    retrievals: Sequence[RankedRetrieval],
    scopes: Sequence[int],
) -> list[tuple[int, float]]:
    """Precision of the top r items, averaged over queries, for each scope r."""
    if not retrievals:
        raise ValidationError('precision-scope curve of an empty query set')
    n = min(r.size for r in retrievals)
    scopes = list(scopes)
    if not scopes:
        raise ValidationError('no scopes requested')
    for r in scopes:
        if int(r) != r or not (1 <= r <= n):
            raise ValidationError(f'scope {r} outside 1..{n}')

    hits = np.array([np.cumsum(r.relevance[:n]) for r in retrievals])
    return [(int(r), float(np.mean(hits[:, r - 1]) / r)) for r in scopes]


def default_scopes(gallery_size: int) -> list[int]:
    """Standard scope grid clipped to the gallery, always ending at the full list."""
    scopes = [s for s in DEFAULT_SCOPES if s < gallery_size]
    scopes.append(gallery_size)
    return scopes


def build_report(
    retrievals: Sequence[RankedRetrieval],
    scopes: Optional[Sequence[int]] = None,
) -> MetricReport:
    """MetricReport from ranked retrievals."""
    per_query = [average_precision(r.relevance) for r in retrievals]
    if scopes is None:
        scopes = default_scopes(min(r.size for r in retrievals))
    return MetricReport(
        map=mean_average_precision(retrievals),
        per_query_ap=per_query,
        pr_curve=precision_recall_curve(retrievals),
        scope_curve=precision_scope_curve(retrievals, scopes),
    )


def retrieve(
    model: SimilarityModel,
    queries: LabeledModality,
    gallery: LabeledModality,
    direction: Direction,
) -> list[RankedRetrieval]:
    """Score and rank a labeled gallery for every labeled query."""
    scores = score_all(model, queries.features, gallery.features, direction)
    return rank_gallery(scores, queries.labels, gallery.labels)


def evaluate_direction(
    model: SimilarityModel,
    queries: LabeledModality,
    gallery: LabeledModality,
    direction: Direction,
    scopes: Optional[Sequence[int]] = None,
) -> MetricReport:
    """Metrics for one query direction."""
    return build_report(retrieve(model, queries, gallery, direction), scopes)


def evaluate_both(
    model: SimilarityModel,
    x_mod: LabeledModality,
    z_mod: LabeledModality,
    scopes: Optional[Sequence[int]] = None,
    directions: Sequence[Direction] = (Direction.X_QUERIES_Z, Direction.Z_QUERIES_X),
) -> dict[Direction, MetricReport]:
    """Reports per direction. x queries search the z gallery and vice versa."""
    reports = {}
    for direction in directions:
        direction = Direction(direction)
        if direction is Direction.X_QUERIES_Z:
            reports[direction] = evaluate_direction(model, x_mod, z_mod, direction, scopes)
        else:
            reports[direction] = evaluate_direction(model, z_mod, x_mod, direction, scopes)
    return reports


def map_summary(reports: dict[Direction, MetricReport]) -> dict[str, float]:
    """MAP per direction plus their arithmetic mean under 'average'."""
    summary = {d.report_key: r.map for d, r in reports.items()}
    summary['average'] = float(np.mean(list(summary.values())))
    return summary


def write_reports(reports: dict[Direction, MetricReport], out_dir: Path) -> Path:
    """
    Write metrics.json plus <key>_pr.csv and <key>_scope.csv per direction.
    Returns the JSON path.
    """
    out_dir = Path(out_dir)
    document = {'map': map_summary(reports)}
    for direction, report in reports.items():
        key = direction.report_key
        document[key] = report.to_dict()
        save_csv_rows(out_dir / f'{key}{PR_CURVE_SUFFIX}', ['recall', 'precision'], report.pr_curve)
        save_csv_rows(out_dir / f'{key}{SCOPE_CURVE_SUFFIX}', ['scope', 'precision'], report.scope_curve)

    json_path = out_dir / METRICS_FILE
    save_json(json_path, document)
    return json_path


if __name__ == '__main__':
    print('Testing evaluation.py')
    print('=' * 40)

    assert average_precision([1, 1, 1]) == 1.0
    assert average_precision([0, 0, 0]) == 0.0
    assert abs(average_precision([1, 0, 1, 0]) - 5 / 6) < 1e-15
    print('[OK] average_precision')

    ranked = rank_gallery([[0.5, 0.5, 0.9]], [1], [1, 0, 1])
    assert ranked[0].ranked_gallery.tolist() == [2, 0, 1], 'tie-break failed'
    print('[OK] rank_gallery tie-break by index')

    curve = precision_recall_curve(rank_gallery([[4.0, 3.0, 2.0, 1.0]], [1], [1, 0, 1, 0]))
    assert dict(curve)[0.5] == 1.0, 'interpolated precision failed'
    print('[OK] precision_recall_curve')

    print('=' * 40)
    print('All tests passed')
