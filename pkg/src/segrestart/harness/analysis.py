"""Slope, rate and plateau fits on (K, value) series."""
from __future__ import annotations

import math

import numpy as np

from ..spectral import ValidationError

MIN_POINTS = 10


def as_series(series) -> tuple[np.ndarray, np.ndarray]:
    """Accept a list of ``(K, value)`` pairs, an ``(n, 2)`` array or a pair of arrays."""
    if isinstance(series, tuple) and len(series) == 2 and np.ndim(series[0]) == 1:
        K, v = series
    else:
        arr = np.asarray(series, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValidationError("series must be (K, value) pairs")
        K, v = arr[:, 0], arr[:, 1]
    K = np.asarray(K, dtype=float)
    v = np.asarray(v, dtype=float)
    if K.shape != v.shape:
        raise ValidationError("K and values differ in length")
    return K, v


def _tail(series, tail_fraction: float):
    if not 0 < tail_fraction <= 1:
        raise ValidationError("tail_fraction must lie in (0, 1]")
    K, v = as_series(series)
    n = len(K)
    start = n - max(1, math.ceil(tail_fraction * n))
    K, v = K[start:], v[start:]
    if len(K) < MIN_POINTS:
        raise ValidationError(f"need at least {MIN_POINTS} points in the tail window, got {len(K)}")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValidationError("tail values must be positive and finite")
    return K, v


def fit_loglog_slope(series, tail_fraction: float = 0.5) -> float:
    """Least-squares slope of ``log value`` against ``log K`` over the tail."""
    K, v = _tail(series, tail_fraction)
    if np.any(K <= 0):
        raise ValidationError("log-log fit needs positive K")
    return float(np.polyfit(np.log(K), np.log(v), 1)[0])


def fit_linear_rate(series, tail_fraction: float = 0.5) -> float:
    """Least-squares slope of ``log value`` against ``K`` (negative when converging)."""
    K, v = _tail(series, tail_fraction)
    return float(np.polyfit(K, np.log(v), 1)[0])


def window(series, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    """The part of a series with ``lo <= K <= hi``."""
    K, v = as_series(series)
    keep = (K >= lo) & (K <= hi)
    return K[keep], v[keep]


def estimate_plateau(series, window: int) -> float:
    """Mean of the last ``window`` values."""
    _, v = as_series(series)
    if window < 1:
        raise ValidationError("window must be positive")
    if len(v) < window:
        raise ValidationError(f"series has {len(v)} points, fewer than the window {window}")
    return float(np.mean(v[-window:]))
