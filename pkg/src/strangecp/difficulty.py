"""
kNN-based difficulty estimators used to normalise nonconformity scores.

Four estimators are provided, all computed from the ``k`` nearest
proper-training rows of each query:

* ``std``       population standard deviation of the neighbours' targets
* ``var``       population variance of the neighbours' targets
* ``res``       mean absolute residual of the neighbours
* ``targ-strg`` target strangeness, ``1 - f(y_hat)`` where ``f`` is a
  Gaussian KDE of the neighbours' targets evaluated at the prediction

Every estimate gets an additive floor ``beta`` and is then clamped to at
least ``SIGMA_MIN`` so that dividing by it is always safe.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .density import DEFAULT_BANDWIDTH, log_density_rows
from .neighbors import NeighborModel, fit_neighbors, search_arrays

SIGMA_MIN = 1e-6
DEFAULT_BETA = 0.01


class DifficultyKind(str, enum.Enum):
    STD = "std"
    VARIANCE = "var"
    RESIDUAL = "res"
    TARGET_STRANGENESS = "targ-strg"

    @classmethod
    def parse(cls, value) -> "DifficultyKind":
        if isinstance(value, cls):
            return value
        aliases = {
            "stddev": cls.STD,
            "variance": cls.VARIANCE,
            "residual": cls.RESIDUAL,
            "targ_strg": cls.TARGET_STRANGENESS,
            "target_strangeness": cls.TARGET_STRANGENESS,
        }
        key = str(value).lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


@dataclass(frozen=True)
class DifficultySpec:
    kind: DifficultyKind
    k: int = 25
    beta: float = DEFAULT_BETA
    bandwidth: float = DEFAULT_BANDWIDTH

    def __post_init__(self):
        object.__setattr__(self, "kind", DifficultyKind.parse(self.kind))
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")


def _finish(raw, beta):
    return np.maximum(np.asarray(raw, dtype=float) + beta, SIGMA_MIN)


def sigmas_from_neighbors(
    kind,
    neighbor_targets,
    neighbor_residuals=None,
    y_hats=None,
    beta: float = DEFAULT_BETA,
    bandwidth: float = DEFAULT_BANDWIDTH,
) -> np.ndarray:
    """
    Difficulty estimates from already gathered neighbourhoods.

    Parameters
    ----------
    kind : DifficultyKind or str
    neighbor_targets : ndarray of shape (n_queries, k)
        Targets of each query's neighbours.
    neighbor_residuals : ndarray of shape (n_queries, k), optional
        Absolute residuals of each query's neighbours; required for ``res``.
    y_hats : ndarray of shape (n_queries,), optional
        Point predictions of the queries; required for ``targ-strg``.
    beta : float
        Additive floor applied before clamping to ``SIGMA_MIN``.
    bandwidth : float
        KDE bandwidth for ``targ-strg``.

    Returns
    -------
    sigmas : ndarray of shape (n_queries,)
    """
    kind = DifficultyKind.parse(kind)
    neighbor_targets = np.asarray(neighbor_targets, dtype=float)
    if kind is DifficultyKind.STD:
        raw = neighbor_targets.std(axis=1)
    elif kind is DifficultyKind.VARIANCE:
        raw = neighbor_targets.var(axis=1)
    elif kind is DifficultyKind.RESIDUAL:
        if neighbor_residuals is None:
            raise ValueError("residual difficulty needs reference residuals")
        raw = np.asarray(neighbor_residuals, dtype=float).mean(axis=1)
    else:
        if y_hats is None:
            raise ValueError("target strangeness needs predictions (y_hats)")
        y_hats = np.asarray(y_hats, dtype=float).ravel()
        if y_hats.shape[0] != neighbor_targets.shape[0]:
            raise ValueError("one prediction per query required")
        if not np.all(np.isfinite(y_hats)):
            raise ValueError("predictions must be finite")
        if not bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        # bigger is stranger: low density of y_hat among neighbour targets
        raw = 1.0 - np.exp(log_density_rows(neighbor_targets, y_hats, bandwidth))
    return _finish(raw, beta)


def _gather(model: NeighborModel, queries, n_jobs=1):
    idx, _ = search_arrays(model, queries, n_jobs=n_jobs)
    res = None if model.reference_residuals is None else model.reference_residuals[idx]
    return model.reference_targets[idx], res


def estimate_std(model: NeighborModel, queries, beta: float = DEFAULT_BETA) -> np.ndarray:
    targets, _ = _gather(model, queries)
    return sigmas_from_neighbors(DifficultyKind.STD, targets, beta=beta)


def estimate_variance(model: NeighborModel, queries, beta: float = DEFAULT_BETA) -> np.ndarray:
    targets, _ = _gather(model, queries)
    return sigmas_from_neighbors(DifficultyKind.VARIANCE, targets, beta=beta)


def estimate_residual(model: NeighborModel, queries, beta: float = DEFAULT_BETA) -> np.ndarray:
    if model.reference_residuals is None:
        raise ValueError("residual difficulty needs a model fitted with residuals")
    targets, residuals = _gather(model, queries)
    return sigmas_from_neighbors(DifficultyKind.RESIDUAL, targets, residuals, beta=beta)


def estimate_target_strangeness(
    model: NeighborModel,
    queries,
    y_hats,
    bandwidth: float = DEFAULT_BANDWIDTH,
    beta: float = DEFAULT_BETA,
) -> np.ndarray:
    """
    Target strangeness of each prediction among its neighbours' targets.

    For every query the targets of its ``k`` nearest reference rows are
    smoothed with a Gaussian KDE of the given bandwidth and the density
    ``f`` is evaluated at the query's prediction; the estimate is
    ``1 - f + beta``, clamped to ``SIGMA_MIN``.
    """
    y_hats = np.asarray(y_hats, dtype=float).ravel()
    targets, _ = _gather(model, queries)
    if targets.shape[0] != y_hats.shape[0]:
        raise ValueError("one prediction per query required")
    return sigmas_from_neighbors(
        DifficultyKind.TARGET_STRANGENESS, targets, y_hats=y_hats, beta=beta, bandwidth=bandwidth
    )


class DifficultyEstimator:
    """
    A fitted difficulty estimator owning its neighbour model.

    Use :func:`fit_difficulty` to construct one.
    """

    def __init__(self, spec: DifficultySpec, model: NeighborModel):
        self.spec = spec
        self.model = model

    def __repr__(self):
        return (f"DifficultyEstimator(kind={self.spec.kind.value}, k={self.spec.k}, "
                f"beta={self.spec.beta}, n_ref={self.model.n_ref})")

    @property
    def kind(self) -> DifficultyKind:
        return self.spec.kind

    def estimate(self, queries, y_hats=None) -> np.ndarray:
        kind = self.spec.kind
        if kind is DifficultyKind.STD:
            return estimate_std(self.model, queries, self.spec.beta)
        if kind is DifficultyKind.VARIANCE:
            return estimate_variance(self.model, queries, self.spec.beta)
        if kind is DifficultyKind.RESIDUAL:
            return estimate_residual(self.model, queries, self.spec.beta)
        if y_hats is None:
            raise ValueError("target strangeness needs predictions (y_hats)")
        return estimate_target_strangeness(
            self.model, queries, y_hats, self.spec.bandwidth, self.spec.beta
        )


def fit_difficulty(
    spec: DifficultySpec,
    train_features,
    train_targets,
    train_residuals: Optional[np.ndarray] = None,
) -> DifficultyEstimator:
    """Build the neighbour model over proper-training rows for ``spec``."""
    if spec.kind is DifficultyKind.RESIDUAL and train_residuals is None:
        raise ValueError("residual difficulty needs train residuals")
    model = fit_neighbors(train_features, train_targets, train_residuals, spec.k)
    return DifficultyEstimator(spec, model)
