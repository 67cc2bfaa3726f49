"""Exact brute-force k-nearest-neighbour search on scaled features."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

# queries per distance block; bounds the (block, n_ref, d) temporary
_BLOCK = 256


@dataclass(frozen=True)
class NeighborSet:
    indices: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return self.indices.shape[0]

    def __eq__(self, other):
        if not isinstance(other, NeighborSet):
            return NotImplemented
        return np.array_equal(self.indices, other.indices) and np.array_equal(
            self.distances, other.distances
        )


@dataclass(frozen=True, eq=False)
class NeighborModel:
    """
    Reference rows for neighbour search.

    Attributes
    ----------
    reference_features : ndarray of shape (n_ref, d)
    reference_targets : ndarray of shape (n_ref,)
    reference_residuals : ndarray of shape (n_ref,) or None
        Absolute residuals |y - y_hat| of the reference rows.
    k : int
    """

    reference_features: np.ndarray
    reference_targets: np.ndarray
    reference_residuals: Optional[np.ndarray]
    k: int

    @property
    def n_ref(self) -> int:
        return self.reference_features.shape[0]

    @property
    def dim(self) -> int:
        return self.reference_features.shape[1]

    def with_k(self, k: int) -> "NeighborModel":
        _check_k(k, self.n_ref)
        return NeighborModel(
            self.reference_features, self.reference_targets, self.reference_residuals, k
        )


def _check_k(k, n_ref):
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    if k > n_ref:
        raise ValueError(f"k={k} exceeds the {n_ref} reference rows")


def _readonly(a):
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


def fit_neighbors(features, targets, residuals=None, k: int = 10) -> NeighborModel:
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    if features.ndim != 2 or features.shape[1] < 1:
        raise ValueError("features must be an (n, d) matrix with d >= 1")
    n_ref = features.shape[0]
    if n_ref == 0:
        raise ValueError("empty reference set")
    targets = np.asarray(targets, dtype=float).ravel()
    if targets.shape[0] != n_ref:
        raise ValueError("features and targets differ in length")
    if residuals is not None:
        residuals = np.abs(np.asarray(residuals, dtype=float).ravel())
        if residuals.shape[0] != n_ref:
            raise ValueError("features and residuals differ in length")
        residuals = _readonly(residuals)
    _check_k(k, n_ref)
    return NeighborModel(_readonly(features), _readonly(targets), residuals, int(k))


def _search(model: NeighborModel, points: np.ndarray):
    diff = points[:, None, :] - model.reference_features[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    k = model.k
    if k < dist.shape[1]:
        part = np.argpartition(dist, k - 1, axis=1)[:, :k]
        part_dist = np.take_along_axis(dist, part, axis=1)
        order = np.take_along_axis(part, np.lexsort((part, part_dist), axis=1), axis=1)
        # rows where the k-th distance is tied may have kept a higher index
        tied = np.count_nonzero(dist <= part_dist.max(axis=1, keepdims=True), axis=1) > k
        if tied.any():
            order[tied] = np.argsort(dist[tied], axis=1, kind="stable")[:, :k]
    else:
        # stable sort: equal distances keep row order, so lower index wins
        order = np.argsort(dist, axis=1, kind="stable")
    return order, np.take_along_axis(dist, order, axis=1)


def _as_points(model, points):
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        # 1-D input: a column of scalar points for 1-D models, else one point
        points = points.reshape(-1, 1) if model.dim == 1 else points.reshape(1, -1)
    if points.ndim != 2 or (points.shape[0] and points.shape[1] != model.dim):
        raise ValueError(
            f"query dimension {points.shape[-1]} does not match model dimension {model.dim}"
        )
    return points


def search_arrays(model: NeighborModel, points, n_jobs: int = 1):
    """
    Neighbour indices and distances for a batch of points as two arrays.

    Returns
    -------
    indices : ndarray of shape (n_points, k), int
    distances : ndarray of shape (n_points, k), ascending along axis 1
    """
    points = _as_points(model, points)
    n = points.shape[0]
    if n == 0:
        return np.empty((0, model.k), dtype=int), np.empty((0, model.k))
    blocks = [points[i:i + _BLOCK] for i in range(0, n, _BLOCK)]
    if n_jobs > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(lambda b: _search(model, b), blocks))
    else:
        results = [_search(model, b) for b in blocks]
    return (
        np.concatenate([r[0] for r in results]),
        np.concatenate([r[1] for r in results]),
    )


def query(model: NeighborModel, point) -> NeighborSet:
    """The ``k`` nearest reference rows to ``point``; ties go to the lower row index."""
    point = np.asarray(point, dtype=float).ravel()
    if point.shape[0] != model.dim:
        raise ValueError(
            f"query dimension {point.shape[0]} does not match model dimension {model.dim}"
        )
    idx, dist = search_arrays(model, point.reshape(1, -1))
    return NeighborSet(idx[0], dist[0])


def query_batch(model: NeighborModel, points, n_jobs: int = 1) -> list[NeighborSet]:
    idx, dist = search_arrays(model, points, n_jobs=n_jobs)
    return [NeighborSet(i, d) for i, d in zip(idx, dist)]
