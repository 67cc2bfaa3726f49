"""Dataset ingestion, splitting, scaling and synthetic data generation."""

from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, TextIO

import numpy as np

TRAIN = "train"
CALIBRATION = "calibration"
TEST = "test"
SPLIT_TAGS = (TRAIN, CALIBRATION, TEST)


class DataError(ValueError):
    """Raised for unusable input data (missing files, columns, empty splits)."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """
    Feature matrix, targets, optional point predictions and split tags.

    All arrays are copied and made read-only on construction.
    """

    features: np.ndarray
    targets: np.ndarray
    predictions: Optional[np.ndarray] = None
    split_tag: Optional[np.ndarray] = None
    feature_names: tuple = ()

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim == 1:
            features = features.reshape(-1, 1)
        if features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        targets = np.asarray(self.targets, dtype=float).ravel()
        n = features.shape[0]
        if targets.shape[0] != n:
            raise DataError(f"{n} feature rows but {targets.shape[0]} targets")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "targets", _frozen(targets))
        if self.predictions is not None:
            predictions = np.asarray(self.predictions, dtype=float).ravel()
            if predictions.shape[0] != n:
                raise DataError(f"{n} rows but {predictions.shape[0]} predictions")
            object.__setattr__(self, "predictions", _frozen(predictions))
        if self.split_tag is None:
            tags = np.full(n, TRAIN, dtype=object)
        else:
            tags = np.asarray(self.split_tag, dtype=object).ravel()
            if tags.shape[0] != n:
                raise DataError(f"{n} rows but {tags.shape[0]} split tags")
            bad = set(tags.tolist()) - set(SPLIT_TAGS)
            if bad:
                raise DataError(f"unknown split tags: {sorted(bad)}")
        object.__setattr__(self, "split_tag", _frozen(tags))
        if not self.feature_names:
            names = tuple(f"x{i + 1}" for i in range(features.shape[1]))
            object.__setattr__(self, "feature_names", names)

    def __len__(self) -> int:
        return self.targets.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def mask(self, tag: str) -> np.ndarray:
        return self.split_tag == tag

    def part(self, tag: str) -> "Dataset":
        """Rows carrying ``tag``, as a new Dataset."""
        m = self.mask(tag)
        return Dataset(
            self.features[m],
            self.targets[m],
            None if self.predictions is None else self.predictions[m],
            self.split_tag[m],
            self.feature_names,
        )

    def retag(self, tags) -> "Dataset":
        return replace(self, split_tag=tags)


@dataclass(frozen=True)
class LoadReport:
    path: str
    total: int
    accepted: int
    rejected: int

    def lines(self) -> list[str]:
        return [
            f"path={self.path}",
            f"rows={self.total}",
            f"accepted={self.accepted}",
            f"rejected={self.rejected}",
        ]


def read_csv(path, target_column: str, prediction_column: Optional[str] = None):
    """
    Parse a CSV file into a Dataset.

    Every column other than the target and prediction columns is a feature.
    Rows with a non-numeric, missing or non-finite cell are dropped.

    Returns
    -------
    dataset : Dataset
        All rows tagged ``train``.
    report : LoadReport
        Accepted and rejected row counts.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if target_column not in header:
            raise DataError(f"{path}: target column {target_column!r} not found")
        if prediction_column is not None and prediction_column not in header:
            raise DataError(
                f"{path}: prediction column {prediction_column!r} not found"
            )
        t_idx = header.index(target_column)
        p_idx = None if prediction_column is None else header.index(prediction_column)
        f_idx = [i for i in range(len(header)) if i not in (t_idx, p_idx)]
        rows = []
        total = 0
        for raw in reader:
            if not raw or all(not c.strip() for c in raw):
                continue
            total += 1
            if len(raw) != len(header):
                continue
            try:
                values = [float(c) for c in raw]
            except ValueError:
                continue
            if not all(math.isfinite(v) for v in values):
                continue
            rows.append(values)
    report = LoadReport(str(path), total, len(rows), total - len(rows))
    if not rows:
        raise DataError(f"{path}: zero valid rows")
    table = np.array(rows, dtype=float)
    dataset = Dataset(
        features=table[:, f_idx],
        targets=table[:, t_idx],
        predictions=None if p_idx is None else table[:, p_idx],
        feature_names=tuple(header[i] for i in f_idx),
    )
    return dataset, report


def load_csv(
    path,
    target_column: str,
    prediction_column: Optional[str] = None,
    report_stream: Optional[TextIO] = None,
) -> Dataset:
    """Like :func:`read_csv`, printing the load report as key=value lines."""
    dataset, report = read_csv(path, target_column, prediction_column)
    stream = sys.stderr if report_stream is None else report_stream
    for line in report.lines():
        print(line, file=stream)
    return dataset


def concat(parts: Sequence[Dataset], tags: Sequence[str]) -> Dataset:
    """Stack datasets vertically, tagging every row of ``parts[i]`` with ``tags[i]``."""
    if len(parts) != len(tags):
        raise ValueError("one tag per part required")
    widths = {p.n_features for p in parts}
    if len(widths) != 1:
        raise DataError(f"feature counts differ between parts: {sorted(widths)}")
    have_pred = [p.predictions is not None for p in parts]
    if any(have_pred) and not all(have_pred):
        raise DataError("predictions present in some parts but not others")
    return Dataset(
        np.vstack([p.features for p in parts]),
        np.concatenate([p.targets for p in parts]),
        np.concatenate([p.predictions for p in parts]) if all(have_pred) else None,
        np.concatenate([np.full(len(p), t, dtype=object) for p, t in zip(parts, tags)]),
        parts[0].feature_names,
    )


def split_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of ``n`` rows; ties go to the earlier split."""
    quotas = [n * f for f in fractions]
    sizes = [math.floor(q) for q in quotas]
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def split(dataset: Dataset, fractions=(0.6, 0.2, 0.2), seed: int = 0) -> Dataset:
    """
    Retag rows as train/calibration/test by a seeded uniform permutation.

    Parameters
    ----------
    dataset : Dataset
    fractions : tuple of three floats
        Positive fractions for train, calibration and test; must sum to 1.
    seed : int
        Seed for the permutation; identical seeds give identical tags.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValueError("need three positive fractions")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions sum to {sum(fractions)}, not 1")
    n = len(dataset)
    sizes = split_sizes(n, fractions)
    if min(sizes) < 1:
        raise DataError(f"split of {n} rows by {fractions} leaves an empty part")
    perm = np.random.default_rng(seed).permutation(n)
    tags = np.empty(n, dtype=object)
    start = 0
    for tag, size in zip(SPLIT_TAGS, sizes):
        tags[perm[start:start + size]] = tag
        start += size
    return dataset.retag(tags)


@dataclass(frozen=True)
class ScalingSpec:
    """Train-fitted z-score for features and min-max to [0, 1] for targets."""

    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_min: float
    target_max: float
    # features whose train std was zero and got std 1 instead
    flagged: tuple = field(default=())

    @property
    def target_range(self) -> float:
        return self.target_max - self.target_min

    def scale_features(self, x):
        return (np.asarray(x, dtype=float) - self.feature_mean) / self.feature_std

    def unscale_features(self, z):
        return np.asarray(z, dtype=float) * self.feature_std + self.feature_mean

    def scale_targets(self, y):
        return (np.asarray(y, dtype=float) - self.target_min) / self.target_range

    def unscale_targets(self, t):
        return np.asarray(t, dtype=float) * self.target_range + self.target_min


def fit_scaling(dataset: Dataset) -> ScalingSpec:
    """Fit a :class:`ScalingSpec` on the rows tagged ``train`` only."""
    train = dataset.mask(TRAIN)
    if train.sum() < 2:
        raise DataError("scaling needs at least 2 train rows")
    x = dataset.features[train]
    y = dataset.targets[train]
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    flagged = tuple(int(i) for i in np.flatnonzero(std == 0))
    std = np.where(std == 0, 1.0, std)
    lo, hi = float(y.min()), float(y.max())
    if lo == hi:
        raise DataError("train targets are constant; min-max scaling undefined")
    return ScalingSpec(_frozen(mean), _frozen(std), lo, hi, flagged)


def apply_scaling(dataset: Dataset, spec: ScalingSpec) -> Dataset:
    return Dataset(
        spec.scale_features(dataset.features),
        spec.scale_targets(dataset.targets),
        None if dataset.predictions is None else spec.scale_targets(dataset.predictions),
        dataset.split_tag,
        dataset.feature_names,
    )


def invert_scaling(dataset: Dataset, spec: ScalingSpec) -> Dataset:
    return Dataset(
        spec.unscale_features(dataset.features),
        spec.unscale_targets(dataset.targets),
        None if dataset.predictions is None else spec.unscale_targets(dataset.predictions),
        dataset.split_tag,
        dataset.feature_names,
    )


def make_synthetic(
    kind: str = "heteroscedastic",
    n: int = 1000,
    noise_scale: float = 1.0,
    seed: int = 0,
    n_features: int = 1,
) -> Dataset:
    """
    Generate a regression dataset with a known noiseless mean.

    Features are uniform on [0, 10]; only the first one drives the target,
    ``y = x1 * sin(x1) + noise``. Heteroscedastic noise has standard deviation
    ``noise_scale * (0.1 + 0.2 * x1)``; homoscedastic noise uses the constant
    ``noise_scale * 1.1`` (the average of the former over [0, 10]). The
    predictions column holds the noiseless mean, i.e. a perfectly fit model.
    """
    if n < 10:
        raise ValueError("n must be at least 10")
    if kind not in ("heteroscedastic", "homoscedastic"):
        raise ValueError(f"unknown synthetic kind {kind!r}")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 10.0, size=(n, n_features))
    x1 = x[:, 0]
    mean = x1 * np.sin(x1)
    eps = rng.standard_normal(n)
    scale = 0.1 + 0.2 * x1 if kind == "heteroscedastic" else np.full(n, 1.1)
    y = mean + noise_scale * eps * scale
    return Dataset(x, y, mean)
