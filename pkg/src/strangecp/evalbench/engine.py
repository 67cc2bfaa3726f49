"""
Split-conformal experiment runner and hyperparameter selection.

One experiment runs, for every seed, the pipeline

1. build the dataset for the seed and scale it on the train rows,
2. fit the difficulty estimator's neighbour search on the proper-training rows,
3. estimate difficulty on the calibration rows (with their predictions) and
   calibrate a conformal regressor plus a conformal predictive system,
4. estimate difficulty on the test rows and score intervals and CRPS,

over the grid of neighbour counts and Mondrian bin counts.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ..conformal import calibrate
from ..cps import cps_calibrate
from ..data import (
    CALIBRATION,
    TEST,
    TRAIN,
    DataError,
    Dataset,
    apply_scaling,
    concat,
    fit_scaling,
    load_csv,
    make_synthetic,
    split,
)
from ..density import DEFAULT_BANDWIDTH
from ..difficulty import DEFAULT_BETA, DifficultyKind, sigmas_from_neighbors
from ..neighbors import fit_neighbors, search_arrays
from .metrics import evaluate

MODES = ("plain", "norm", "mondrian")
DEFAULT_CONFIDENCES = (0.9, 0.95, 0.99)
DEFAULT_SEEDS = (0, 1, 2, 3, 4)
SEARCH_GRID = tuple(range(10, 101, 10))


@dataclass(frozen=True)
class SyntheticSource:
    """Fresh synthetic data per seed, split by ``fractions`` under the same seed."""

    kind: str = "heteroscedastic"
    n: int = 4000
    noise_scale: float = 1.0
    n_features: int = 1
    fractions: tuple = (0.5, 0.25, 0.25)

    def dataset(self, seed: int) -> Dataset:
        ds = make_synthetic(self.kind, self.n, self.noise_scale, seed, self.n_features)
        return split(ds, self.fractions, seed)

    def describe(self) -> str:
        return f"synthetic:{self.kind}:n={self.n}:noise={self.noise_scale}"


@dataclass(frozen=True)
class DatasetSource:
    """
    A prepared dataset. With ``fractions`` it is resplit per seed, otherwise
    its existing split tags are used for every seed.
    """

    data: Dataset
    fractions: Optional[tuple] = None

    def dataset(self, seed: int) -> Dataset:
        if self.fractions is None:
            return self.data
        return split(self.data, self.fractions, seed)

    def describe(self) -> str:
        return f"dataset:n={len(self.data)}"


@dataclass(frozen=True)
class CsvSource:
    """
    CSV input: either three files already split, or one file resplit per seed.
    """

    target_column: str
    prediction_column: str
    train: Optional[str] = None
    calibration: Optional[str] = None
    test: Optional[str] = None
    data: Optional[str] = None
    fractions: tuple = (0.5, 0.25, 0.25)

    def load(self) -> DatasetSource:
        if self.data is not None:
            ds = load_csv(self.data, self.target_column, self.prediction_column)
            return DatasetSource(ds, tuple(self.fractions))
        paths = (self.train, self.calibration, self.test)
        if any(p is None for p in paths):
            raise DataError("need --train, --cal and --test, or a single --data file")
        parts = [load_csv(p, self.target_column, self.prediction_column) for p in paths]
        return DatasetSource(concat(parts, (TRAIN, CALIBRATION, TEST)))

    def describe(self) -> str:
        return f"csv:{self.data or self.train}"


@dataclass(frozen=True)
class ExperimentConfig:
    source: object
    estimator: DifficultyKind = DifficultyKind.TARGET_STRANGENESS
    mode: str = "norm"
    confidences: tuple = DEFAULT_CONFIDENCES
    k_grid: tuple = (25,)
    bin_grid: tuple = (10,)
    seeds: tuple = DEFAULT_SEEDS
    beta: float = DEFAULT_BETA
    bandwidth: float = DEFAULT_BANDWIDTH
    scale: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "estimator", DifficultyKind.parse(self.estimator))
        mode = {"normalized": "norm", "mond": "mondrian"}.get(self.mode, self.mode)
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        for name in ("confidences", "k_grid", "bin_grid", "seeds"):
            values = tuple(getattr(self, name))
            if not values:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, values)
        if any(not 0 < c < 1 for c in self.confidences):
            raise ValueError("confidences must lie in (0, 1)")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if any(int(k) != k or k < 1 for k in self.k_grid):
            raise ValueError("k grid must hold positive integers")
        if any(int(b) != b or b < 1 for b in self.bin_grid):
            raise ValueError("bin grid must hold positive integers")
        if self.beta < 0 or not self.bandwidth > 0:
            raise ValueError("need beta >= 0 and bandwidth > 0")

    def cells(self) -> list[tuple[Optional[int], Optional[int]]]:
        if self.mode == "plain":
            return [(None, None)]
        ks = sorted(set(int(k) for k in self.k_grid))
        if self.mode == "norm":
            return [(k, None) for k in ks]
        bins = sorted(set(int(b) for b in self.bin_grid))
        return [(k, b) for k in ks for b in bins]


def config_id(mode: str, estimator, k: Optional[int], bins: Optional[int]) -> str:
    if mode == "plain":
        return "plain"
    est = DifficultyKind.parse(estimator).value
    label = f"{mode}_{est}_k{k}"
    return label if bins is None else f"{label}_b{bins}"


@dataclass(frozen=True)
class ResultRow:
    config_id: str
    estimator: str
    mode: str
    k: Optional[int]
    bins: Optional[int]
    seed: int
    confidence: float
    error: float
    coverage: float
    eff_mean: Optional[float]
    eff_med: Optional[float]
    crps: float
    unbounded_fraction: float
    time_fit: float = field(default=0.0, compare=False)
    time_evaluate: float = field(default=0.0, compare=False)

    def metrics(self) -> tuple:
        """Everything except wall-clock timings."""
        return (self.config_id, self.estimator, self.mode, self.k, self.bins, self.seed,
                self.confidence, self.error, self.coverage, self.eff_mean, self.eff_med,
                self.crps, self.unbounded_fraction)


def _run_seed(config: ExperimentConfig, seed: int) -> list[ResultRow]:
    ds = config.source.dataset(seed)
    if ds.predictions is None:
        raise DataError("dataset has no predictions column")
    if config.scale:
        ds = apply_scaling(ds, fit_scaling(ds))
    tr, ca, te = ds.part(TRAIN), ds.part(CALIBRATION), ds.part(TEST)
    for name, part in (("train", tr), ("calibration", ca), ("test", te)):
        if len(part) == 0:
            raise DataError(f"{name} split is empty")
    res_tr = np.abs(tr.targets - tr.predictions)
    res_ca = ca.targets - ca.predictions
    kind = config.estimator

    t0 = time.perf_counter()
    if config.mode != "plain":
        k_max = max(config.k_grid)
        if k_max > len(tr):
            raise ValueError(f"k={k_max} exceeds the {len(tr)} proper-training rows")
        model = fit_neighbors(tr.features, tr.targets, res_tr, k_max)
        idx_ca, _ = search_arrays(model, ca.features)
    shared_fit = time.perf_counter() - t0
    t0 = time.perf_counter()
    if config.mode != "plain":
        idx_te, _ = search_arrays(model, te.features)
    shared_eval = time.perf_counter() - t0

    def sigmas(idx, k, y_hats):
        nn = idx[:, :k]
        return sigmas_from_neighbors(kind, tr.targets[nn], res_tr[nn], y_hats,
                                     config.beta, config.bandwidth)

    rows = []
    last_k, sig_ca, sig_te = None, None, None
    for k, bins in config.cells():
        t0 = time.perf_counter()
        if k is not None and k != last_k:
            sig_ca = sigmas(idx_ca, k, ca.predictions)
        if config.mode == "plain":
            cr = calibrate(res_ca)
            cps = cps_calibrate(res_ca)
        elif config.mode == "norm":
            cr = calibrate(res_ca, sigmas=sig_ca)
            cps = cps_calibrate(res_ca, sigmas=sig_ca)
        else:
            cr = calibrate(res_ca, mondrian_bins=bins, difficulty=sig_ca)
            cps = cps_calibrate(res_ca, bin_edges=cr.bin_edges, difficulty=sig_ca)
        time_fit = shared_fit + time.perf_counter() - t0

        t0 = time.perf_counter()
        if k is not None and k != last_k:
            sig_te = sigmas(idx_te, k, te.predictions)
        last_k = k
        norm = config.mode == "norm"
        mond = config.mode == "mondrian"
        crps = cps.mean_crps(te.predictions, te.targets,
                             sig_te if norm else None, sig_te if mond else None)
        scored = []
        for c in config.confidences:
            bounds = cr.interval_arrays(te.predictions, c,
                                        sig_te if norm else None, sig_te if mond else None)
            scored.append((c, evaluate(bounds, te.targets)))
        time_eval = shared_eval + time.perf_counter() - t0

        cid = config_id(config.mode, kind, k, bins)
        for c, m in scored:
            rows.append(ResultRow(
                config_id=cid,
                estimator="none" if config.mode == "plain" else kind.value,
                mode=config.mode, k=k, bins=bins, seed=int(seed), confidence=float(c),
                error=m.error, coverage=m.coverage, eff_mean=m.eff_mean, eff_med=m.eff_med,
                crps=crps, unbounded_fraction=m.unbounded_fraction,
                time_fit=time_fit, time_evaluate=time_eval,
            ))
    return rows


def _order(row: ResultRow):
    return (-1 if row.k is None else row.k, -1 if row.bins is None else row.bins,
            row.seed, row.confidence)


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """
    Run every (k, bins, seed, confidence) cell of ``config``.

    Rows come back ordered by grid cell, then seed, then confidence,
    regardless of ``n_jobs``. ``time_fit`` covers neighbour search on the
    calibration rows, difficulty estimation and calibration; ``time_evaluate``
    covers the test-side equivalents, intervals and metrics. Neighbour search
    is shared across the k grid and its time is charged to every cell.
    """
    if isinstance(config.source, CsvSource):
        config = replace(config, source=config.source.load())
    if config.n_jobs > 1 and len(config.seeds) > 1:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as pool:
            per_seed = list(pool.map(lambda s: _run_seed(config, s), config.seeds))
    else:
        per_seed = [_run_seed(config, s) for s in config.seeds]
    rows = [r for part in per_seed for r in part]
    return sorted(rows, key=_order)


@dataclass(frozen=True)
class ConfigSummary:
    """Seed-aggregated results of one configuration at one confidence."""

    config_id: str
    estimator: str
    mode: str
    k: Optional[int]
    bins: Optional[int]
    confidence: float
    n_seeds: int
    mean_coverage: float
    std_coverage: float
    mean_eff: float
    std_eff: float
    mean_crps: float

    @property
    def label(self) -> str:
        return f"{self.config_id}@{self.confidence:g}"


@dataclass(frozen=True)
class Selection:
    best: Optional[ConfigSummary]
    candidates: tuple
    unique: bool
    diagnostic: str


def _std(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.std(ddof=1)) if values.size > 1 else 0.0


def summarize(rows: Sequence[ResultRow]) -> list[ConfigSummary]:
    """Group rows by (config, confidence) and aggregate over seeds."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.config_id, r.confidence), []).append(r)
    out = []
    for (cid, conf), members in groups.items():
        effs = [m.eff_mean for m in members]
        eff = (np.array(effs, dtype=float) if all(e is not None for e in effs)
               else np.array([math.nan]))
        first = members[0]
        out.append(ConfigSummary(
            config_id=cid, estimator=first.estimator, mode=first.mode, k=first.k,
            bins=first.bins, confidence=conf, n_seeds=len(members),
            mean_coverage=float(np.mean([m.coverage for m in members])),
            std_coverage=_std([m.coverage for m in members]),
            mean_eff=float(eff.mean()), std_eff=_std(eff),
            mean_crps=float(np.mean([m.crps for m in members])),
        ))
    return out


def select_best(
    rows: Sequence[ResultRow], target_coverage: float = 0.9, tolerance: float = 0.01
) -> Selection:
    """
    Narrowest configuration among those whose seed-mean effective coverage
    is within ``target_coverage +/- tolerance``.

    Configurations with any unbounded-only seed (no finite widths) are not
    eligible. No match is reported through ``best=None`` and a diagnostic.
    """
    if not rows:
        raise ValueError("no result rows")
    summaries = summarize(rows)
    eligible = [s for s in summaries
                if abs(s.mean_coverage - target_coverage) <= tolerance + 1e-12
                and math.isfinite(s.mean_eff)]
    if not eligible:
        closest = min(summaries, key=lambda s: abs(s.mean_coverage - target_coverage))
        return Selection(None, tuple(summaries), False,
                         f"no configuration within {target_coverage:g} +/- {tolerance:g} "
                         f"coverage; closest is {closest.label} at {closest.mean_coverage:.4f}")
    ranked = sorted(eligible, key=lambda s: s.mean_eff)
    best = ranked[0]
    unique = len(ranked) == 1 or ranked[1].mean_eff > best.mean_eff
    note = f"selected {best.label}: eff_mean {best.mean_eff:.6g}, coverage {best.mean_coverage:.4f}"
    if not unique:
        note += " (tied width)"
    return Selection(best, tuple(summaries), unique, note)
