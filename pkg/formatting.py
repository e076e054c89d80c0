#!/usr/bin/env python3
"""Formatting utilities for lrbs. Numbers, metrics, summaries."""

import math
from typing import Union

from config import FLOAT_DIGITS


def format_float(value: Union[float, int]) -> str:
    """Decimal form with 17 significant digits; parses back to the same double."""
    return f'{float(value):.{FLOAT_DIGITS}g}'


def format_map(value: float) -> str:
    """MAP as a percentage with two decimals, the way result tables print it: 66.95"""
    return f'{value * 100:.2f}'


def format_sci(value: float) -> str:
    """Compact scientific notation for logs: 1.234e-05"""
    if not math.isfinite(value):
        return str(value)
    return f'{value:.3e}'


def parse_scopes(text: str) -> list[int]:
    """Parse '10,20,50' into [10, 20, 50]. Raises ValueError on bad items."""
    scopes = []
    for part in text.replace(' ', '').split(','):
        if not part:
            continue
        scopes.append(int(part))
    if not scopes:
        raise ValueError(f'No scopes in: {text!r}')
    return scopes


def format_map_summary(x_query: float = None, z_query: float = None, average: float = None) -> str:
    """One-line MAP summary: 'MAP x_query=91.20 z_query=90.85 average=91.03'"""
    parts = []
    for name, value in (('x_query', x_query), ('z_query', z_query), ('average', average)):
        if value is not None:
            parts.append(f'{name}={format_map(value)}')
    return 'MAP ' + ' '.join(parts)


if __name__ == '__main__':
    print('Testing formatting.py')
    print('=' * 40)

    assert float(format_float(0.1)) == 0.1, 'Round trip failed'
    assert float(format_float(1 / 3)) == 1 / 3, 'Round trip third failed'
    print('[OK] format_float')

    assert format_map(0.6695) == '66.95', 'MAP format failed'
    print('[OK] format_map')

    assert parse_scopes('10, 20,50') == [10, 20, 50], 'Scope parse failed'
    print('[OK] parse_scopes')

    assert format_map_summary(0.5, 1.0, 0.75) == 'MAP x_query=50.00 z_query=100.00 average=75.00'
    print('[OK] format_map_summary')

    print('=' * 40)
    print('All tests passed')
