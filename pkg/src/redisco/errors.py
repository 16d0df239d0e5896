"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit 2,
data problems exit 3, numeric failures exit 4.
"""

from __future__ import annotations


class RediscoError(Exception):
    """Base class for errors raised by this package."""

    exit_code = 1


class ConfigError(RediscoError):
    """Invalid configuration: bad flag values, unknown metric names, etc."""

    exit_code = 2


class DataError(RediscoError):
    """Invalid or insufficient input data (parse failures, empty windows)."""

    exit_code = 3


class NumericError(RediscoError):
    """Numeric failure: infeasible fit targets, non-convergence, degenerate
    samples where ratios are requested."""

    exit_code = 4


class UnstableQueueError(NumericError):
    """Queueing system has no steady state (arrival rate >= service capacity)."""


class DataQualityWarning(UserWarning):
    """Non-fatal signal that a result rests on thin or truncated information."""
