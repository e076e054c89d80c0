#!/usr/bin/env python3
"""
Dataset ingestion and synthetic cross-modal data for lrbs.

File formats:
    features  UTF-8 CSV, no header, one sample per row, decimal reals
    labels    one base-10 integer per line, same order as the feature rows

In memory a modality is dim x count: column i is file row i.
"""

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from config import BUNDLE_FILES
from errors import DataFormatError, InputError, ValidationError
from formatting import format_float
from pairs import LabeledModality
from storage import save_csv_rows, save_text

log = logging.getLogger('lrbs.data')


@dataclass(frozen=True)
class DatasetBundle:
    """Train/test splits of both modalities."""
    train_x: LabeledModality
    train_z: LabeledModality
    test_x: LabeledModality
    test_z: LabeledModality
    name: str = ''

    def __post_init__(self):
        if self.train_x.dim != self.test_x.dim:
            raise ValidationError(f'x dims differ across splits: {self.train_x.dim} vs {self.test_x.dim}')
        if self.train_z.dim != self.test_z.dim:
            raise ValidationError(f'z dims differ across splits: {self.train_z.dim} vs {self.test_z.dim}')
        universe = self.train_x.classes | self.train_z.classes
        for split_name, modality in (('test_x', self.test_x), ('test_z', self.test_z)):
            unseen = modality.classes - universe
            if unseen:
                raise ValidationError(f'{split_name} has classes absent from training: {sorted(unseen)}')

    def split(self, which: str) -> tuple[LabeledModality, LabeledModality]:
        if which == 'train':
            return self.train_x, self.train_z
        if which == 'test':
            return self.test_x, self.test_z
        raise ValidationError(f'unknown split {which!r}, expected train or test')


@dataclass(frozen=True)
class SyntheticSpec:
    """Shared-latent-space generator settings."""
    classes: int
    latent_dim: int
    dim_x: int
    dim_z: int
    per_class_train: int
    per_class_test: int
    noise_sigma: float
    seed: int = 0

    def __post_init__(self):
        for name in ('classes', 'latent_dim', 'dim_x', 'dim_z', 'per_class_train', 'per_class_test'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValidationError(f'{name} must be a positive integer, got {value}')
        if not (self.noise_sigma >= 0 and math.isfinite(self.noise_sigma)):
            raise ValidationError(f'noise_sigma must be >= 0, got {self.noise_sigma}')


def _read_features(path: Path) -> np.ndarray:
    rows = []
    width = None
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            for line_no, row in enumerate(csv.reader(f), start=1):
                if not row or all(not cell.strip() for cell in row):
                    raise DataFormatError('empty row', path, line_no)
                if width is None:
                    width = len(row)
                elif len(row) != width:
                    raise DataFormatError(f'expected {width} columns, got {len(row)}', path, line_no)
                try:
                    values = [float(cell) for cell in row]
                except ValueError:
                    bad = next(c for c in row if not _is_float(c))
                    raise DataFormatError(f'non-numeric cell {bad!r}', path, line_no) from None
                if not all(math.isfinite(v) for v in values):
                    raise DataFormatError('non-finite value', path, line_no)
                rows.append(values)
    except FileNotFoundError:
        raise InputError(f'features file not found: {path}') from None
    except UnicodeDecodeError as e:
        raise DataFormatError(f'not UTF-8 text: {e}', path) from None

    if not rows:
        raise DataFormatError('no samples', path)
    return np.array(rows, dtype=np.float64)


def _is_float(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def _read_labels(path: Path) -> np.ndarray:
    labels = []
    try:
        with open(path, 'r', encoding='utf-8') as f:
            for line_no, line in enumerate(f, start=1):
                text = line.strip()
                try:
                    labels.append(int(text, 10))
                except ValueError:
                    raise DataFormatError(f'not an integer label: {text!r}', path, line_no) from None
    except FileNotFoundError:
        raise InputError(f'labels file not found: {path}') from None
    return np.array(labels, dtype=np.int64)


def load_modality(features_path: Path, labels_path: Path) -> LabeledModality:
    """Load a feature CSV and its label file as a dim x count modality."""
    rows = _read_features(Path(features_path))
    labels = _read_labels(Path(labels_path))
    if labels.size != rows.shape[0]:
        raise DataFormatError(
            f'{labels.size} labels for {rows.shape[0]} feature rows in {features_path}',
            labels_path,
        )
    log.debug(f'Loaded {features_path}: {rows.shape[0]} samples, dim {rows.shape[1]}')
    return LabeledModality(features=rows.T, labels=labels)


def save_modality(modality: LabeledModality, features_path: Path, labels_path: Path) -> None:
    """Write a modality in the CSV + label-file format, 17 significant digits."""
    rows = ([format_float(v) for v in column] for column in modality.features.T)
    save_csv_rows(Path(features_path), [], rows)
    save_text(Path(labels_path), ''.join(f'{int(label)}\n' for label in modality.labels))


def save_bundle(bundle: DatasetBundle, out_dir: Path) -> list[Path]:
    """Write the eight bundle files under out_dir. Returns the paths written."""
    out_dir = Path(out_dir)
    written = []
    for (split, side), (features_name, labels_name) in BUNDLE_FILES.items():
        modality = getattr(bundle, f'{split}_{side}')
        save_modality(modality, out_dir / features_name, out_dir / labels_name)
        written.extend([out_dir / features_name, out_dir / labels_name])
    log.info(f'Wrote bundle {bundle.name or "(unnamed)"} to {out_dir}')
    return written


def load_split(data_dir: Path, split: str) -> tuple[LabeledModality, LabeledModality]:
    """Load (x, z) modalities of one split from a bundle directory."""
    data_dir = Path(data_dir)
    if (split, 'x') not in BUNDLE_FILES:
        raise ValidationError(f'unknown split {split!r}, expected train or test')
    loaded = []
    for side in ('x', 'z'):
        features_name, labels_name = BUNDLE_FILES[(split, side)]
        loaded.append(load_modality(data_dir / features_name, data_dir / labels_name))
    return loaded[0], loaded[1]


def load_bundle(data_dir: Path, name: str = '') -> DatasetBundle:
    """Load all eight bundle files from a directory."""
    train_x, train_z = load_split(data_dir, 'train')
    test_x, test_z = load_split(data_dir, 'test')
    return DatasetBundle(train_x, train_z, test_x, test_z, name=name or Path(data_dir).name)


def generate_synthetic(spec: SyntheticSpec) -> DatasetBundle:
    """
    Shared-latent-space data: class centers c_j ~ N(0, I_k), fixed maps
    A (d1 x k) and B (d2 x k); an x sample of class j is A (c_j + e) and a
    z sample is B (c_j + e') with e, e' ~ N(0, sigma^2 I). Deterministic in the settings, seed included.
    """
    rng = np.random.default_rng(spec.seed)
    centers = rng.standard_normal((spec.classes, spec.latent_dim))
    map_x = rng.standard_normal((spec.dim_x, spec.latent_dim))
    map_z = rng.standard_normal((spec.dim_z, spec.latent_dim))

    def draw(per_class: int, projection: np.ndarray) -> LabeledModality:
        # classes interleaved 0, 1, ..., c-1, 0, 1, ... so index order carries no class signal
        labels = np.tile(np.arange(spec.classes), per_class)
        noise = rng.standard_normal((labels.size, spec.latent_dim)) * spec.noise_sigma
        latent = centers[labels] + noise
        return LabeledModality(features=projection @ latent.T, labels=labels)

    train_x = draw(spec.per_class_train, map_x)
    train_z = draw(spec.per_class_train, map_z)
    test_x = draw(spec.per_class_test, map_x)
    test_z = draw(spec.per_class_test, map_z)
    name = f'synthetic-c{spec.classes}-k{spec.latent_dim}-seed{spec.seed}'
    return DatasetBundle(train_x, train_z, test_x, test_z, name=name)
