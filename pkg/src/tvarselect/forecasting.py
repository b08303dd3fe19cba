"""Plug-in forecasters and empirical mean squared prediction errors."""

from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np

from .estimation import hstep_coeffs, yule_walker
from .exceptions import EmptySegmentError, InvalidSplitError, WindowOutOfRangeError
from .series import check_series

__all__ = [
    "Segments",
    "split_segments",
    "forecast_ls",
    "forecast_s",
    "MspeResult",
    "empirical_mspe",
]


class Segments(NamedTuple):
    """Index ranges (1-based, inclusive) of training, end-of-training, validation and test."""

    M0: range
    M1: range
    M2: range
    M3: range


def split_segments(T, m):
    """``M0 = 1..T-2m``, ``M1 = T-2m+1..T-m``, ``M2 = T-m+1..T``, ``M3 = T+1..T+m``."""
    T, m = int(T), int(m)
    if m < 1 or T <= 2 * m:
        raise InvalidSplitError(f"need T > 2m >= 2, got T={T}, m={m}")
    return Segments(
        range(1, T - 2 * m + 1),
        range(T - 2 * m + 1, T - m + 1),
        range(T - m + 1, T + 1),
        range(T + 1, T + m + 1),
    )


def _dot_recent(x, t, v):
    p = len(v)
    if p == 0:
        return 0.0
    if t - p + 1 < 1:
        raise WindowOutOfRangeError(f"forecast at t={t} needs {p} past values")
    recent = x[t - p:t][::-1]  # x_t, x_{t-1}, ..., x_{t-p+1}
    return float(np.dot(v, recent))


def forecast_ls(x, t, h, p, N):
    """Locally stationary h-step forecast of ``x_{t+h}`` from a window of length ``N``."""
    x = check_series(x)
    if p == 0:
        return 0.0
    v = hstep_coeffs(yule_walker(x, t, N, p), h)
    return _dot_recent(x, int(t), v.values)


def forecast_s(x, t, h, p):
    """Stationary h-step forecast: coefficients estimated from all of ``x_1..x_t``."""
    return forecast_ls(x, t, h, p, int(t))


class MspeResult(NamedTuple):
    value: float
    errors: np.ndarray


def empirical_mspe(x, h, segment, forecaster: Callable[[np.ndarray, int, int], float]):
    """Mean squared error of ``forecaster(x, t, h)`` against ``x_{t+h}`` for ``t+h`` in ``segment``.

    ``segment`` holds 1-based target indices.  The per-point errors
    ``x_{t+h} - forecast`` are returned alongside the mean.
    """
    x = check_series(x)
    targets = [int(s) for s in segment]
    if not targets:
        raise EmptySegmentError("segment is empty")
    if max(targets) > x.shape[0] or min(targets) - h < 1:
        raise WindowOutOfRangeError("segment targets must be observed and have an anchor >= 1")
    errors = np.array([x[s - 1] - forecaster(x, s - h, h) for s in targets])
    return MspeResult(float(np.mean(errors ** 2)), errors)
