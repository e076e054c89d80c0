#!/usr/bin/env python3
"""Storage utilities for lrbs. All artifact writes are atomic."""

import csv
import io
import json
import os
from pathlib import Path
from tempfile import NamedTemporaryFile
from typing import Any, Iterable, Sequence


def save_bytes(path: Path, payload: bytes) -> None:
    """Write bytes to path atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    with NamedTemporaryFile(
        mode='wb',
        suffix=path.suffix or '.tmp',
        dir=path.parent,
        delete=False,
    ) as tmp:
        tmp.write(payload)
        tmp_path = tmp.name

    os.replace(tmp_path, path)


def save_text(path: Path, text: str) -> None:
    """Write UTF-8 text atomically. Line endings are always '\\n'."""
    save_bytes(path, text.encode('utf-8'))


def save_json(path: Path, data: Any) -> None:
    """Save data to JSON file atomically, keys sorted for reproducible output."""
    text = json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True)
    save_text(path, text + '\n')


def save_csv_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Save rows as CSV atomically. header may be empty for headerless files."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    if header:
        writer.writerow(header)
    writer.writerows(rows)
    save_text(path, buffer.getvalue())


if __name__ == '__main__':
    test_path = Path('/tmp/lrbs_storage_test.json')

    print('Testing storage.py')
    print('=' * 40)

    test_data = {'b': 1, 'a': [1, 2, 3]}
    save_json(test_path, test_data)
    assert json.loads(test_path.read_text()) == test_data, 'Save/load mismatch'
    assert test_path.read_text().index('"a"') < test_path.read_text().index('"b"'), 'Keys not sorted'
    print('[OK] save_json')

    csv_path = Path('/tmp/lrbs_storage_test.csv')
    save_csv_rows(csv_path, ['iter', 'value'], [(0, 1.5), (1, 0.25)])
    assert csv_path.read_text() == 'iter,value\n0,1.5\n1,0.25\n', 'CSV mismatch'
    print('[OK] save_csv_rows')

    test_path.unlink()
    csv_path.unlink()

    print('=' * 40)
    print('All tests passed')
