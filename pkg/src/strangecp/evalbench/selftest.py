"""Quick invariant checks runnable from the CLI without the test suite."""

from __future__ import annotations

import math
import sys

import numpy as np

from ..conformal import calibrate
from ..cps import PredictiveDistribution, crps
from ..density import kde_density, kde_fit
from ..difficulty import sigmas_from_neighbors
from ..neighbors import fit_neighbors, query
from .engine import ExperimentConfig, SyntheticSource, run_experiment


def _kde_matches_direct_sum(rng):
    for _ in range(200):
        samples = rng.normal(0, 1, rng.integers(1, 50))
        h = rng.uniform(0.1, 2.0)
        y = rng.normal(0, 2)
        direct = sum(math.exp(-0.5 * ((y - s) / h) ** 2) for s in samples)
        direct /= len(samples) * h * math.sqrt(2 * math.pi)
        got = kde_density(kde_fit(samples, h), y)
        if abs(got - direct) > 1e-10 * direct:
            return False
    return True


def _strangeness_bounds(rng):
    lo = 1 - 1 / (0.75 * math.sqrt(2 * math.pi))
    targets = rng.normal(0, rng.uniform(0.01, 3, (2000, 1)), (2000, 20))
    y_hats = rng.normal(0, 3, 2000)
    s = sigmas_from_neighbors("targ-strg", targets, y_hats=y_hats, beta=0.0)
    return bool(np.all(s >= lo - 1e-12) and np.all(s <= 1.0))


def _crps_matches_integral(rng):
    for _ in range(50):
        x = np.sort(rng.normal(0, 1, rng.integers(1, 12)))
        y = rng.normal(0, 1.5)
        d = PredictiveDistribution(x)
        knots = np.unique(np.concatenate([x, [y]]))
        total = 0.0
        for a, b in zip(knots[:-1], knots[1:]):
            f = d.cdf(a) - (1.0 if a >= y else 0.0)
            total += f * f * (b - a)
        if abs(crps(d, y) - total) > 1e-9:
            return False
    return True


def _neighbors_match_full_sort(rng):
    ref = rng.normal(size=(200, 3))
    model = fit_neighbors(ref, rng.normal(size=200), k=7)
    for p in rng.normal(size=(20, 3)):
        dist = np.sqrt(((ref - p) ** 2).sum(axis=1))
        if not np.array_equal(query(model, p).distances, np.sort(dist)[:7]):
            return False
    return True


def _nested_intervals(rng):
    cr = calibrate(rng.exponential(size=300), sigmas=rng.uniform(0.1, 2, 300))
    y = rng.normal(size=100)
    s = rng.uniform(0.1, 2, 100)
    prev = None
    for c in (0.5, 0.8, 0.9, 0.95, 0.99):
        lo, hi = cr.interval_arrays(y, c, s)
        if prev is not None and (np.any(lo > prev[0]) or np.any(hi < prev[1])):
            return False
        prev = (lo, hi)
    return True


def _plain_coverage(rng):
    cfg = ExperimentConfig(SyntheticSource("homoscedastic", n=2000), mode="plain",
                           confidences=(0.9,), seeds=tuple(range(5)))
    cov = np.mean([r.coverage for r in run_experiment(cfg)])
    return 0.86 <= cov <= 0.94


CHECKS = [
    ("kde matches direct summation", _kde_matches_direct_sum),
    ("target strangeness within [1 - 1/(h*sqrt(2pi)), 1]", _strangeness_bounds),
    ("crps matches piecewise integral", _crps_matches_integral),
    ("neighbour distances match full sort", _neighbors_match_full_sort),
    ("intervals nested in confidence", _nested_intervals),
    ("plain split-conformal coverage near 0.9", _plain_coverage),
]


def run_selftest(stream=None, seed: int = 0) -> bool:
    stream = sys.stdout if stream is None else stream
    ok = True
    for name, check in CHECKS:
        passed = check(np.random.default_rng(seed))
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}", file=stream)
    return ok
