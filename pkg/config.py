#!/usr/bin/env python3
"""Configuration for lrbs. Constants, defaults, and environment overrides."""

import os
from pathlib import Path

# Paths
OUTPUT_DIR = Path(os.environ.get('LRBS_OUTPUT_DIR', '.'))
DIAGNOSTIC_FILE = Path(os.environ.get('LRBS_DIAGNOSTIC_FILE', '/tmp/lrbs_diagnostic.txt'))

# Dataset bundle file names (split, modality) -> (features, labels)
BUNDLE_FILES = {
    ('train', 'x'): ('train_x.csv', 'train_x.labels'),
    ('train', 'z'): ('train_z.csv', 'train_z.labels'),
    ('test', 'x'): ('test_x.csv', 'test_x.labels'),
    ('test', 'z'): ('test_z.csv', 'test_z.labels'),
}

# Artifact names written by `lrbs.py eval`
METRICS_FILE = 'metrics.json'
PR_CURVE_SUFFIX = '_pr.csv'
SCOPE_CURVE_SUFFIX = '_scope.csv'

# Numerical tolerances
RANK_TOL = 1e-12            # singular values <= RANK_TOL * sigma_max are dropped
SVT_GUARD = 1e-12           # sigma - gamma must exceed this to survive thresholding
OPTIMALITY_TOL = 1e-6       # subgradient residual tolerance for SVT checks
MIN_STEP = 1e-15            # backtracking gives up below this step size
FLOAT_DIGITS = 17           # significant digits for decimal serialization

# Training defaults
DEFAULT_MAX_ITERS = 500
DEFAULT_REL_TOL = 1e-6
DEFAULT_ETA0 = 1.0
DEFAULT_BACKTRACK_SHRINK = 0.5
DEFAULT_STEP_GROWTH = 1.1
LOG_EVERY = 50

# Evaluation
RECALL_LEVELS = tuple(round(0.05 * i, 2) for i in range(1, 21))
DEFAULT_SCOPES = (1, 5, 10, 20, 50, 100, 200, 500, 1000)
DEFAULT_TOP_K = 10

# Model container
MODEL_MAGIC = b'LRBS1'
MODEL_VERSION = 1

# Exit codes
EXIT_OK = 0
EXIT_IO = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4


def get_env(key: str, default: str = None, required: bool = False) -> str:
    """Get environment variable with optional default."""
    value = os.environ.get(key, default)
    if required and not value:
        raise EnvironmentError(f'Required environment variable {key} not set')
    return value


def get_log_level() -> str:
    """Default log level, overridable with LRBS_LOG_LEVEL."""
    return get_env('LRBS_LOG_LEVEL', 'INFO').upper()


def print_config() -> None:
    """Print effective configuration for verification."""
    print('lrbs configuration')
    print('=' * 40)
    print(f'Output dir:         {OUTPUT_DIR}')
    print(f'Diagnostic file:    {DIAGNOSTIC_FILE}')
    print(f'Log level:          {get_log_level()}')
    print(f'Max iterations:     {DEFAULT_MAX_ITERS}')
    print(f'Relative tol:       {DEFAULT_REL_TOL}')
    print(f'Initial step:       {DEFAULT_ETA0}')
    print(f'Backtrack shrink:   {DEFAULT_BACKTRACK_SHRINK}')
    print(f'Step growth:        {DEFAULT_STEP_GROWTH}')
    print(f'Rank tolerance:     {RANK_TOL}')
    print(f'Recall grid:        {RECALL_LEVELS[0]} .. {RECALL_LEVELS[-1]} ({len(RECALL_LEVELS)} points)')
    print('=' * 40)
    print('Bundle files:')
    for (split, modality), (features, labels) in BUNDLE_FILES.items():
        print(f'  {split}/{modality}: {features}, {labels}')


if __name__ == '__main__':
    print_config()
