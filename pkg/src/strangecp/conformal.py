"""Split conformal regressors: plain, normalized and Mondrian."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

PLAIN = "plain"
NORMALIZED = "normalized"
MONDRIAN = "mondrian"


@dataclass(frozen=True)
class PredictionInterval:
    lower: float
    upper: float
    confidence: float

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, y: float) -> bool:
        return self.lower <= y <= self.upper


def conformal_rank(n: int, confidence: float) -> int:
    """1-based rank ``ceil((n + 1) * confidence)`` of the score used as half-width."""
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    # guard against (n + 1) * c landing a hair above an integer
    return math.ceil((n + 1) * confidence - 1e-9)


def _half_width(sorted_alphas: np.ndarray, confidence: float) -> float:
    n = sorted_alphas.shape[0]
    r = conformal_rank(n, confidence)
    return float(sorted_alphas[r - 1]) if r <= n else math.inf


def _sorted_readonly(a):
    a = np.sort(np.asarray(a, dtype=float))
    a.flags.writeable = False
    return a


def equal_frequency_edges(difficulty, bins: int) -> np.ndarray:
    """
    Inner bin edges splitting ``difficulty`` into about ``bins`` equal-count bins.

    Bins are right-closed, ``(e[i-1], e[i]]``, so a value equal to an edge
    belongs to the lower bin. Duplicate edges and edges that would leave a
    bin empty are dropped, with a warning, which lowers the bin count.
    """
    difficulty = np.asarray(difficulty, dtype=float).ravel()
    if bins < 1:
        raise ValueError("need at least one Mondrian bin")
    if bins > difficulty.shape[0]:
        raise ValueError(f"{bins} bins requested for {difficulty.shape[0]} calibration points")
    n = difficulty.shape[0]
    ranked = np.sort(difficulty)
    # upper order statistic of each bin, so bin j holds ranks up to ceil(j * n / bins)
    upper = -(-np.arange(1, bins) * n // bins) - 1
    edges = np.unique(ranked[upper])
    while edges.size:
        counts = np.bincount(np.searchsorted(edges, difficulty, side="left"),
                             minlength=edges.size + 1)
        empty = np.flatnonzero(counts == 0)
        if not empty.size:
            break
        b = empty[0]
        edges = np.delete(edges, b if b < edges.size else b - 1)
    if edges.size + 1 < bins:
        warnings.warn(
            f"tied difficulty values: using {edges.size + 1} Mondrian bins instead of {bins}",
            stacklevel=2,
        )
    edges.flags.writeable = False
    return edges


def assign_bins(edges: np.ndarray, values) -> np.ndarray:
    return np.searchsorted(edges, np.asarray(values, dtype=float), side="left")


class ConformalRegressor:
    """
    Calibrated nonconformity scores turning point predictions into intervals.

    Attributes
    ----------
    mode : {'plain', 'normalized', 'mondrian'}
    alphas : ndarray
        All calibration scores, sorted ascending.
    bin_edges : ndarray or None
        Inner Mondrian bin edges over the difficulty estimate.
    binned_alphas : list of ndarray or None
        Sorted raw residuals per Mondrian bin.
    """

    def __init__(self, mode, alphas, bin_edges=None, binned_alphas=None):
        self.mode = mode
        self.alphas = alphas
        self.bin_edges = bin_edges
        self.binned_alphas = binned_alphas

    def __repr__(self):
        extra = f", bins={len(self.binned_alphas)}" if self.mode == MONDRIAN else ""
        return f"ConformalRegressor(mode={self.mode}, n_cal={self.alphas.shape[0]}{extra})"

    @property
    def n_bins(self) -> int:
        return 1 if self.binned_alphas is None else len(self.binned_alphas)

    def half_widths(self, confidence: float, difficulties=None) -> np.ndarray:
        """Score at the conformal rank; one value, or one per difficulty in Mondrian mode."""
        if self.mode != MONDRIAN:
            return np.asarray(_half_width(self.alphas, confidence))
        if difficulties is None:
            raise ValueError("Mondrian regressor needs difficulty estimates")
        per_bin = np.array([_half_width(a, confidence) for a in self.binned_alphas])
        return per_bin[assign_bins(self.bin_edges, difficulties)]

    def interval_arrays(self, y_hats, confidence, sigmas=None, difficulties=None):
        """
        Vectorised intervals.

        Returns
        -------
        lower, upper : ndarray of shape (n,)
            Infinite where calibration is too small for ``confidence``.
        """
        y_hats = np.asarray(y_hats, dtype=float).ravel()
        if self.mode == NORMALIZED:
            if sigmas is None:
                raise ValueError("normalized regressor needs sigmas")
            sigmas = np.asarray(sigmas, dtype=float).ravel()
            if sigmas.shape != y_hats.shape:
                raise ValueError("one sigma per prediction required")
            if np.any(~(sigmas > 0)):
                raise ValueError("sigmas must be positive")
            w = self.half_widths(confidence) * sigmas
        elif self.mode == MONDRIAN:
            if difficulties is None:
                raise ValueError("Mondrian regressor needs difficulty estimates")
            difficulties = np.asarray(difficulties, dtype=float).ravel()
            if difficulties.shape != y_hats.shape:
                raise ValueError("one difficulty per prediction required")
            w = self.half_widths(confidence, difficulties)
        else:
            w = np.broadcast_to(self.half_widths(confidence), y_hats.shape)
        return y_hats - w, y_hats + w


def calibrate(
    residuals,
    sigmas=None,
    mondrian_bins: Optional[int] = None,
    difficulty=None,
) -> ConformalRegressor:
    """
    Fit a conformal regressor from calibration residuals.

    Parameters
    ----------
    residuals : array-like of shape (n_cal,)
        Calibration residuals; absolute values are taken.
    sigmas : array-like of shape (n_cal,), optional
        Difficulty estimates; gives normalized scores ``|y - y_hat| / sigma``.
    mondrian_bins : int, optional
        Number of equal-frequency bins over ``difficulty``; raw residuals are
        kept per bin. Cannot be combined with ``sigmas``.
    difficulty : array-like of shape (n_cal,), optional
        Binning variable for Mondrian mode.
    """
    residuals = np.abs(np.asarray(residuals, dtype=float).ravel())
    n = residuals.shape[0]
    if n == 0:
        raise ValueError("no calibration residuals")
    if mondrian_bins is not None:
        if sigmas is not None:
            raise ValueError("Mondrian bins use raw residuals; do not pass sigmas")
        if difficulty is None:
            raise ValueError("Mondrian calibration needs a difficulty vector")
        difficulty = np.asarray(difficulty, dtype=float).ravel()
        if difficulty.shape[0] != n:
            raise ValueError("difficulty and residuals differ in length")
        edges = equal_frequency_edges(difficulty, int(mondrian_bins))
        labels = assign_bins(edges, difficulty)
        binned = [_sorted_readonly(residuals[labels == b]) for b in range(edges.size + 1)]
        return ConformalRegressor(MONDRIAN, _sorted_readonly(residuals), edges, binned)
    if sigmas is not None:
        sigmas = np.asarray(sigmas, dtype=float).ravel()
        if sigmas.shape[0] != n:
            raise ValueError("sigmas and residuals differ in length")
        if np.any(~(sigmas > 0)):
            raise ValueError("sigmas must be positive")
        return ConformalRegressor(NORMALIZED, _sorted_readonly(residuals / sigmas))
    return ConformalRegressor(PLAIN, _sorted_readonly(residuals))


def interval(
    regressor: ConformalRegressor,
    y_hat: float,
    confidence: float,
    sigma: Optional[float] = None,
    difficulty: Optional[float] = None,
) -> PredictionInterval:
    lo, hi = regressor.interval_arrays(
        [y_hat],
        confidence,
        None if sigma is None else [sigma],
        None if difficulty is None else [difficulty],
    )
    return PredictionInterval(float(lo[0]), float(hi[0]), confidence)


def interval_batch(
    regressor: ConformalRegressor,
    y_hats,
    confidence: float,
    sigmas=None,
    difficulties=None,
    n_jobs: int = 1,
) -> list[PredictionInterval]:
    y_hats = np.asarray(y_hats, dtype=float).ravel()
    if y_hats.size == 0:
        return []
    sig = None if sigmas is None else np.asarray(sigmas, dtype=float).ravel()
    dif = None if difficulties is None else np.asarray(difficulties, dtype=float).ravel()

    def run(sl):
        lo, hi = regressor.interval_arrays(
            y_hats[sl], confidence,
            None if sig is None else sig[sl],
            None if dif is None else dif[sl],
        )
        return [PredictionInterval(float(a), float(b), confidence) for a, b in zip(lo, hi)]

    if n_jobs > 1:
        chunks = [slice(i, i + 1024) for i in range(0, y_hats.size, 1024)]
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(run, chunks))
        return [iv for part in parts for iv in part]
    return run(slice(None))
