#!/usr/bin/env python3
"""
Main entry point for lrbs.

This is the only entry point - all other modules are libraries.

Usage:
    python3 lrbs.py gen --classes 5 --latent 4 --dimx 30 --dimz 20 \\
        --train 20 --test 10 --sigma 0.3 --seed 42 --out data/
    python3 lrbs.py train --data data/ --lambda 1e-3 --model model.lrbs --trace trace.csv
    python3 lrbs.py eval --model model.lrbs --data data/ --out results/
    python3 lrbs.py retrieve --model model.lrbs --data data/ --out ranked.csv
    python3 lrbs.py score --model model.lrbs --data data/ --out scores.csv
    python3 lrbs.py check
"""

import argparse
import logging
import sys
from pathlib import Path

from config import (
    DEFAULT_BACKTRACK_SHRINK,
    DEFAULT_ETA0,
    DEFAULT_MAX_ITERS,
    DEFAULT_REL_TOL,
    DEFAULT_TOP_K,
    EXIT_IO,
    EXIT_OK,
    OUTPUT_DIR,
    get_log_level,
    print_config,
)
from data import SyntheticSpec, generate_synthetic, load_modality, load_split, save_bundle
from errors import LrbsError, ValidationError
from evaluation import Direction, evaluate_both, map_summary, retrieve, score_all, write_reports
from formatting import format_float, format_map_summary, format_sci, parse_scopes
from model_file import load_model, save_model
from optimizer import TRACE_COLUMNS, TrainConfig, train
from pairs import LabeledModality
from storage import save_csv_rows

log = logging.getLogger('lrbs.cli')

DIRECTION_CHOICES = ('both', Direction.X_QUERIES_Z.value, Direction.Z_QUERIES_X.value)


def setup_logging(verbose: bool = False) -> None:
    """Configure logging for the script. Logs go to stderr."""
    level = logging.DEBUG if verbose else getattr(logging, get_log_level(), logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
    )


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f'must be a positive integer, got {value}')
    return value


def non_negative_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f'must be >= 0, got {text}')
    return value


def _load_modalities(args) -> tuple[LabeledModality, LabeledModality]:
    """x and z modalities from explicit file flags, else from the bundle directory."""
    explicit = (args.x_features, args.x_labels, args.z_features, args.z_labels)
    if any(explicit):
        if not all(explicit):
            raise ValidationError('--x-features, --x-labels, --z-features and --z-labels go together')
        return (load_modality(Path(args.x_features), Path(args.x_labels)),
                load_modality(Path(args.z_features), Path(args.z_labels)))
    if not args.data:
        raise ValidationError('give --data DIR or the four --x-/--z- file flags')
    return load_split(Path(args.data), args.split)


def _directions(choice: str) -> list[Direction]:
    if choice == 'both':
        return [Direction.X_QUERIES_Z, Direction.Z_QUERIES_X]
    return [Direction(choice)]


def cmd_gen(args) -> int:
    spec = SyntheticSpec(
        classes=args.classes,
        latent_dim=args.latent,
        dim_x=args.dimx,
        dim_z=args.dimz,
        per_class_train=args.train,
        per_class_test=args.test,
        noise_sigma=args.sigma,
        seed=args.seed,
    )
    bundle = generate_synthetic(spec)
    written = save_bundle(bundle, Path(args.out))
    print(f'Wrote {len(written)} files for {bundle.name} to {args.out}')
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = TrainConfig(
        lam=args.lam,
        max_iters=args.max_iters,
        rel_tol=args.tol,
        eta0=args.eta0,
        backtrack_shrink=args.shrink,
        accelerate=not args.no_accelerate,
        pca_energy=args.pca_energy,
        seed=args.seed,
    )
    x_mod, z_mod = _load_modalities(args)
    name = Path(args.data).name if args.data else ''
    model, trace = train(x_mod, z_mod, cfg, name=name)

    save_model(model, Path(args.model))
    if args.trace:
        rows = [
            (it, format_float(f), format_float(s), format_float(nuc), format_float(eta), format_float(mom), rank)
            for it, f, s, nuc, eta, mom, rank in trace.to_rows()
        ]
        save_csv_rows(Path(args.trace), TRACE_COLUMNS, rows)

    best = trace.records[trace.best_iteration]
    status = 'converged' if trace.converged else 'max_iters'
    print(f'trained {status} iters={trace.iterations} objective={format_sci(best.objective)} '
          f'rank={best.rank} model={args.model}')
    return EXIT_OK


def cmd_score(args) -> int:
    model = load_model(Path(args.model))
    x_mod, z_mod = _load_modalities(args)
    direction = Direction(args.direction)
    queries, gallery = (x_mod, z_mod) if direction is Direction.X_QUERIES_Z else (z_mod, x_mod)
    scores = score_all(model, queries.features, gallery.features, direction)
    save_csv_rows(Path(args.out), [], ([format_float(v) for v in row] for row in scores))
    print(f'scored {scores.shape[0]} queries x {scores.shape[1]} gallery items -> {args.out}')
    return EXIT_OK


def cmd_retrieve(args) -> int:
    model = load_model(Path(args.model))
    x_mod, z_mod = _load_modalities(args)
    rows = []
    for direction in _directions(args.direction):
        queries, gallery = (x_mod, z_mod) if direction is Direction.X_QUERIES_Z else (z_mod, x_mod)
        for ranked in retrieve(model, queries, gallery, direction):
            top = min(args.top_k, ranked.size)
            for position in range(top):
                rows.append((
                    direction.value,
                    ranked.query_index,
                    position + 1,
                    int(ranked.ranked_gallery[position]),
                    format_float(ranked.scores[position]),
                    int(ranked.relevance[position]),
                ))
    save_csv_rows(Path(args.out), ['direction', 'query', 'rank', 'gallery', 'score', 'relevant'], rows)
    print(f'wrote {len(rows)} ranked entries -> {args.out}')
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(Path(args.model))
    x_mod, z_mod = _load_modalities(args)
    try:
        scopes = parse_scopes(args.scopes) if args.scopes else None
    except ValueError as e:
        raise ValidationError(f'bad --scopes: {e}') from None

    reports = evaluate_both(model, x_mod, z_mod, scopes=scopes, directions=_directions(args.direction))
    json_path = write_reports(reports, Path(args.out))
    summary = map_summary(reports)
    print(f'{format_map_summary(summary.get("x_query"), summary.get("z_query"), summary["average"])} '
          f'-> {json_path}')
    return EXIT_OK


def cmd_check(args) -> int:
    from diagnose import run_diagnostics
    return run_diagnostics(Path(args.output)) if args.output else run_diagnostics()


def cmd_config(args) -> int:
    print_config()
    return EXIT_OK


def _add_data_flags(parser: argparse.ArgumentParser, default_split: str) -> None:
    parser.add_argument('--data', help='Bundle directory (train_x.csv, train_x.labels, ...)')
    parser.add_argument('--split', choices=('train', 'test'), default=default_split,
                        help=f'Bundle split to use (default: {default_split})')
    parser.add_argument('--x-features', help='x-modality feature CSV (overrides --data)')
    parser.add_argument('--x-labels', help='x-modality label file')
    parser.add_argument('--z-features', help='z-modality feature CSV')
    parser.add_argument('--z-labels', help='z-modality label file')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Low-rank bilinear similarity learning for cross-modal retrieval',
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument('-v', '--verbose', action='store_true', help='Enable debug logging')
    subparsers = parser.add_subparsers(dest='command', help='Command to run')

    gen = subparsers.add_parser('gen', help='Generate a synthetic cross-modal bundle')
    gen.add_argument('--classes', type=positive_int, default=5)
    gen.add_argument('--latent', type=positive_int, default=4)
    gen.add_argument('--dimx', type=positive_int, default=30)
    gen.add_argument('--dimz', type=positive_int, default=20)
    gen.add_argument('--train', type=positive_int, default=20, help='Training samples per class')
    gen.add_argument('--test', type=positive_int, default=10, help='Test samples per class')
    gen.add_argument('--sigma', type=non_negative_float, default=0.3, help='Latent noise std')
    gen.add_argument('--seed', type=int, default=42)
    gen.add_argument('--out', default=str(OUTPUT_DIR), help='Output directory')
    gen.set_defaults(func=cmd_gen)

    tr = subparsers.add_parser('train', help='Train a similarity model')
    _add_data_flags(tr, 'train')
    tr.add_argument('--lambda', dest='lam', type=float, required=True, help='Nuclear-norm weight')
    tr.add_argument('--pca-energy', type=float, default=None, help='Fit PCA keeping this energy fraction')
    tr.add_argument('--max-iters', type=int, default=DEFAULT_MAX_ITERS)
    tr.add_argument('--tol', type=float, default=DEFAULT_REL_TOL, help='Relative objective change to stop')
    tr.add_argument('--eta0', type=float, default=DEFAULT_ETA0, help='Initial step size')
    tr.add_argument('--shrink', type=float, default=DEFAULT_BACKTRACK_SHRINK, help='Backtracking factor')
    tr.add_argument('--no-accelerate', action='store_true', help='Plain proximal gradient, no momentum')
    tr.add_argument('--seed', type=int, default=0)
    tr.add_argument('--model', required=True, help='Model output path')
    tr.add_argument('--trace', help='Trace CSV output path')
    tr.set_defaults(func=cmd_train)

    sc = subparsers.add_parser('score', help='Write the full similarity matrix')
    _add_data_flags(sc, 'test')
    sc.add_argument('--model', required=True)
    sc.add_argument('--direction', choices=DIRECTION_CHOICES[1:], default=Direction.X_QUERIES_Z.value)
    sc.add_argument('--out', required=True, help='Score CSV output path')
    sc.set_defaults(func=cmd_score)

    rt = subparsers.add_parser('retrieve', help='Write top-k ranked gallery lists')
    _add_data_flags(rt, 'test')
    rt.add_argument('--model', required=True)
    rt.add_argument('--direction', choices=DIRECTION_CHOICES, default='both')
    rt.add_argument('--top-k', type=positive_int, default=DEFAULT_TOP_K)
    rt.add_argument('--out', required=True, help='Ranked list CSV output path')
    rt.set_defaults(func=cmd_retrieve)

    ev = subparsers.add_parser('eval', help='MAP, precision-recall and precision-scope curves')
    _add_data_flags(ev, 'test')
    ev.add_argument('--model', required=True)
    ev.add_argument('--direction', choices=DIRECTION_CHOICES, default='both')
    ev.add_argument('--scopes', help='Comma-separated scopes, e.g. 10,20,50')
    ev.add_argument('--out', default=str(OUTPUT_DIR), help='Output directory for JSON and CSVs')
    ev.set_defaults(func=cmd_eval)

    ck = subparsers.add_parser('check', help='Run numerical self-checks')
    ck.add_argument('--output', help='Report path')
    ck.set_defaults(func=cmd_check)

    cf = subparsers.add_parser('config', help='Print configuration')
    cf.set_defaults(func=cmd_config)

    return parser


def main(argv=None) -> int:
    """Command-line interface. Returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(verbose=args.verbose)

    if not getattr(args, 'func', None):
        parser.print_help()
        return EXIT_OK

    try:
        return args.func(args)
    except LrbsError as e:
        log.error(f'{type(e).__name__}: {e}')
        return e.exit_code
    except OSError as e:
        log.error(f'I/O error: {e}')
        return EXIT_IO


if __name__ == '__main__':
    sys.exit(main())
