"""Exception hierarchy shared by the library and the CLI.

All library errors derive from ``FrustraError`` so callers can catch one
type. The CLI maps each class to a distinct process exit code.
"""

from __future__ import annotations


class FrustraError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(FrustraError):
    """Invalid configuration: bad schema mapping, malformed config file,
    missing input path, inconsistent options."""

    exit_code = 2


class DataError(FrustraError):
    """Data violates an operation's contract: wrong shape, missing class,
    out-of-alphabet symbol, mismatched feature ordering."""

    exit_code = 3


class TrainingError(FrustraError):
    """Training failed or hit a degenerate state (non-finite loss,
    single-class targets)."""

    exit_code = 4
