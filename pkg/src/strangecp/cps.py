"""Split conformal predictive systems and exact CRPS of their step CDFs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .conformal import assign_bins


@dataclass(frozen=True, eq=False)
class PredictiveDistribution:
    """Empirical step CDF placing mass 1/n on each support point."""

    support_points: np.ndarray

    def __post_init__(self):
        pts = np.sort(np.asarray(self.support_points, dtype=float).ravel())
        pts.flags.writeable = False
        object.__setattr__(self, "support_points", pts)

    def __len__(self):
        return self.support_points.shape[0]

    def cdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.searchsorted(self.support_points, z, side="right") / len(self)

    def crps(self, y_true: float) -> float:
        return crps(self, y_true)


def _pwm_spread(sorted_x: np.ndarray) -> float:
    # (1/(2n^2)) sum_i sum_j |x_i - x_j| via weights (2i - n - 1) on sorted x
    n = sorted_x.shape[0]
    weights = 2.0 * np.arange(1, n + 1) - n - 1
    return float(weights @ sorted_x) / (n * n)


def crps(distribution: PredictiveDistribution, y_true: float) -> float:
    """
    Exact CRPS of an empirical distribution,
    ``mean|x_i - y| - (1/(2n^2)) sum_ij |x_i - x_j|``.
    """
    x = distribution.support_points
    if x.shape[0] == 0:
        raise ValueError("empty predictive distribution")
    value = float(np.mean(np.abs(x - y_true))) - _pwm_spread(x)
    return max(value, 0.0)


class _ScoreSet:
    """Sorted scores with prefix sums for O(log n) mean absolute deviation."""

    def __init__(self, scores):
        self.scores = np.sort(np.asarray(scores, dtype=float))
        self.scores.flags.writeable = False
        self.prefix = np.concatenate([[0.0], np.cumsum(self.scores)])
        self.spread = _pwm_spread(self.scores)

    def mean_abs_dev(self, t: np.ndarray) -> np.ndarray:
        n = self.scores.shape[0]
        m = np.searchsorted(self.scores, t, side="left")
        below = self.prefix[m]
        above = self.prefix[-1] - below
        return (t * m - below + above - t * (n - m)) / n


class ConformalPredictiveSystem:
    """
    Calibrated signed scores ``(y - y_hat) / sigma``, optionally per Mondrian bin.

    Construct with :func:`cps_calibrate`.
    """

    def __init__(self, scores: _ScoreSet, normalized: bool, bin_edges=None, binned=None):
        self._all = scores
        self.normalized = normalized
        self.bin_edges = bin_edges
        self._binned = binned

    def __repr__(self):
        return (f"ConformalPredictiveSystem(n_cal={self.scores.shape[0]}, "
                f"normalized={self.normalized}, mondrian={self.mondrian})")

    @property
    def scores(self) -> np.ndarray:
        return self._all.scores

    @property
    def mondrian(self) -> bool:
        return self._binned is not None

    def _score_set(self, difficulty) -> _ScoreSet:
        if not self.mondrian:
            return self._all
        if difficulty is None:
            raise ValueError("Mondrian predictive system needs a difficulty estimate")
        return self._binned[int(assign_bins(self.bin_edges, [difficulty])[0])]

    def _check_sigma(self, sigma):
        if self.normalized:
            if sigma is None:
                raise ValueError("normalized predictive system needs sigma")
            if not np.all(np.asarray(sigma) > 0):
                raise ValueError("sigma must be positive")
            return sigma
        return 1.0

    def distribution(self, y_hat, sigma=None, difficulty=None) -> PredictiveDistribution:
        sigma = self._check_sigma(sigma)
        support = y_hat + self._score_set(difficulty).scores * sigma
        support.flags.writeable = False
        return PredictiveDistribution(support)

    def crps_values(self, y_hats, y_true, sigmas=None, difficulties=None) -> np.ndarray:
        """
        CRPS of every test instance's predictive distribution.

        Same values as building each distribution and calling :func:`crps`,
        computed from prefix sums instead.
        """
        y_hats = np.asarray(y_hats, dtype=float).ravel()
        y_true = np.asarray(y_true, dtype=float).ravel()
        if y_hats.shape != y_true.shape:
            raise ValueError("y_hats and y_true differ in length")
        if self.normalized:
            sigmas = np.asarray(self._check_sigma(sigmas), dtype=float).ravel()
            if sigmas.shape != y_hats.shape:
                raise ValueError("one sigma per prediction required")
        else:
            sigmas = np.ones_like(y_hats)
        t = (y_true - y_hats) / sigmas
        out = np.empty_like(y_hats)
        if self.mondrian:
            if difficulties is None:
                raise ValueError("Mondrian predictive system needs difficulty estimates")
            labels = assign_bins(self.bin_edges, np.asarray(difficulties, dtype=float).ravel())
            groups = [(labels == b, s) for b, s in enumerate(self._binned)]
        else:
            groups = [(slice(None), self._all)]
        for sel, s in groups:
            out[sel] = sigmas[sel] * (s.mean_abs_dev(t[sel]) - s.spread)
        return np.maximum(out, 0.0)

    def mean_crps(self, y_hats, y_true, sigmas=None, difficulties=None) -> float:
        return float(np.mean(self.crps_values(y_hats, y_true, sigmas, difficulties)))


def cps_calibrate(
    signed_residuals,
    sigmas=None,
    bin_edges: Optional[np.ndarray] = None,
    difficulty=None,
) -> ConformalPredictiveSystem:
    """
    Fit a conformal predictive system.

    Parameters
    ----------
    signed_residuals : array-like of shape (n_cal,)
        ``y - y_hat`` on the calibration set.
    sigmas : array-like of shape (n_cal,), optional
        Positive difficulty estimates; scores become ``(y - y_hat) / sigma``.
    bin_edges : ndarray, optional
        Inner Mondrian edges (see :func:`strangecp.conformal.equal_frequency_edges`);
        requires ``difficulty`` and keeps raw signed residuals per bin.
    difficulty : array-like of shape (n_cal,), optional
    """
    r = np.asarray(signed_residuals, dtype=float).ravel()
    if r.size == 0:
        raise ValueError("no calibration residuals")
    normalized = sigmas is not None
    if normalized:
        sigmas = np.asarray(sigmas, dtype=float).ravel()
        if sigmas.shape != r.shape:
            raise ValueError("sigmas and residuals differ in length")
        if np.any(~(sigmas > 0)):
            raise ValueError("sigmas must be positive")
        r = r / sigmas
    if bin_edges is None:
        return ConformalPredictiveSystem(_ScoreSet(r), normalized)
    if normalized:
        raise ValueError("Mondrian bins use raw residuals; do not pass sigmas")
    if difficulty is None:
        raise ValueError("Mondrian calibration needs a difficulty vector")
    labels = assign_bins(bin_edges, np.asarray(difficulty, dtype=float).ravel())
    binned = [_ScoreSet(r[labels == b]) for b in range(len(bin_edges) + 1)]
    if any(s.scores.size == 0 for s in binned):
        raise ValueError("empty Mondrian bin in calibration data")
    return ConformalPredictiveSystem(_ScoreSet(r), False, np.asarray(bin_edges), binned)


def cps_distribution(
    handle: ConformalPredictiveSystem, y_hat: float, sigma: Optional[float] = None,
    difficulty: Optional[float] = None,
) -> PredictiveDistribution:
    return handle.distribution(y_hat, sigma, difficulty)
