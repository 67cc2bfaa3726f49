"""Interval coverage and efficiency metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..conformal import PredictionInterval


@dataclass(frozen=True)
class IntervalMetrics:
    """
    error : float
        Fraction of targets strictly outside their interval.
    coverage : float
        ``1 - error``, the effective coverage.
    eff_mean, eff_med : float or None
        Mean and median width over bounded intervals; None when none are bounded.
    unbounded_fraction : float
    """

    error: float
    coverage: float
    eff_mean: Optional[float]
    eff_med: Optional[float]
    unbounded_fraction: float


def _as_bounds(intervals):
    if isinstance(intervals, tuple) and len(intervals) == 2:
        lower, upper = intervals
        return np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    if isinstance(intervals, np.ndarray):
        return intervals[:, 0].astype(float), intervals[:, 1].astype(float)
    intervals = list(intervals)
    if intervals and isinstance(intervals[0], PredictionInterval):
        return (np.array([iv.lower for iv in intervals], dtype=float),
                np.array([iv.upper for iv in intervals], dtype=float))
    arr = np.asarray(intervals, dtype=float).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]


def evaluate(intervals, y_true) -> IntervalMetrics:
    """
    Score prediction intervals against true targets.

    Parameters
    ----------
    intervals : list of PredictionInterval, (n, 2) array, or (lower, upper) tuple
    y_true : array-like of shape (n,)
    """
    lower, upper = _as_bounds(intervals)
    y_true = np.asarray(y_true, dtype=float).ravel()
    n = y_true.shape[0]
    if n == 0:
        raise ValueError("no intervals to evaluate")
    if lower.shape[0] != n:
        raise ValueError(f"{lower.shape[0]} intervals for {n} targets")
    outside = (y_true < lower) | (y_true > upper)
    error = float(np.count_nonzero(outside)) / n
    bounded = np.isfinite(lower) & np.isfinite(upper)
    widths = (upper - lower)[bounded]
    return IntervalMetrics(
        error=error,
        coverage=1.0 - error,
        eff_mean=float(widths.mean()) if widths.size else None,
        eff_med=float(np.median(widths)) if widths.size else None,
        unbounded_fraction=float(np.count_nonzero(~bounded)) / n,
    )
