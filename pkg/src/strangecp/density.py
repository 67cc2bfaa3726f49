"""One-dimensional Gaussian kernel density estimation over neighbour targets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_BANDWIDTH = 0.75

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class KdeModel:
    samples: np.ndarray
    bandwidth: float = DEFAULT_BANDWIDTH

    @property
    def k(self) -> int:
        return self.samples.shape[0]

    def log_density(self, point: float) -> float:
        return kde_log_density(self, point)

    def density(self, point: float) -> float:
        return kde_density(self, point)


def kde_fit(samples, bandwidth: float = DEFAULT_BANDWIDTH) -> KdeModel:
    samples = np.array(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("KDE needs at least one sample")
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    samples.flags.writeable = False
    return KdeModel(samples, float(bandwidth))


def log_density_rows(samples, points, bandwidth: float = DEFAULT_BANDWIDTH) -> np.ndarray:
    """
    Log of the Gaussian KDE of each row of ``samples`` at the matching point.

    Evaluates ``log((1/(k*h)) * sum_i phi((point - samples_i) / h))`` with
    the max-shifted log-sum-exp, so far-tail points give large negative but
    finite values instead of ``-inf``.

    Parameters
    ----------
    samples : array-like of shape (m, k)
    points : array-like of shape (m,)
    bandwidth : float

    Returns
    -------
    ndarray of shape (m,)
    """
    samples = np.asarray(samples, dtype=float)
    points = np.asarray(points, dtype=float).reshape(-1, 1)
    if not np.all(np.isfinite(points)):
        raise ValueError("KDE evaluation point must be finite")
    k = samples.shape[1]
    u = (points - samples) / bandwidth
    e = -0.5 * u * u
    top = e.max(axis=1)
    lse = top + np.log(np.exp(e - top[:, None]).sum(axis=1))
    return lse - math.log(k * bandwidth) - _LOG_SQRT_2PI


def kde_log_density(model: KdeModel, point: float) -> float:
    return float(log_density_rows(model.samples[None, :], [point], model.bandwidth)[0])


def kde_density(model: KdeModel, point: float) -> float:
    """Density f(point); underflows to 0.0 only when the log density is below ~-745."""
    return math.exp(kde_log_density(model, point))
