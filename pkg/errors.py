#!/usr/bin/env python3
"""Exception hierarchy for lrbs. Each class carries the CLI exit code."""

from typing import Optional

from config import EXIT_IO, EXIT_NUMERICAL, EXIT_VALIDATION


class LrbsError(Exception):
    """Base class for all lrbs failures."""

    exit_code = 1

    def __init__(self, message: str, details: Optional[dict] = None):
        super().__init__(message)
        self.details = details or {}


class InputError(LrbsError):
    """Input file missing, unreadable or malformed."""

    exit_code = EXIT_IO


class DataFormatError(InputError):
    """Feature or label file failed to parse."""

    def __init__(self, message: str, path=None, line: Optional[int] = None):
        location = ''
        if path is not None:
            location = f'{path}:{line}: ' if line is not None else f'{path}: '
        super().__init__(f'{location}{message}', details={'path': str(path), 'line': line})
        self.path = path
        self.line = line


class ModelFormatError(InputError):
    """Model file is not a valid LRBS container."""


class ValidationError(LrbsError, ValueError):
    """Precondition violated: bad parameter, shape mismatch, degenerate data."""

    exit_code = EXIT_VALIDATION


class NumericalError(LrbsError, ArithmeticError):
    """Numerical abort: non-finite values or step-size underflow."""

    exit_code = EXIT_NUMERICAL
