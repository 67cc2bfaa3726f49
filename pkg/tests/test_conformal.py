import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strangecp.conformal import (
    assign_bins,
    calibrate,
    conformal_rank,
    equal_frequency_edges,
    interval,
    interval_batch,
)


def test_calibrate_examples():
    assert calibrate([3, 1, 2]).alphas.tolist() == [1, 2, 3]
    assert calibrate([2, 4], sigmas=[1, 2]).alphas.tolist() == [2, 2]
    cr = calibrate([1, 2, 10, 20], mondrian_bins=2, difficulty=[1, 1, 9, 9])
    assert [a.tolist() for a in cr.binned_alphas] == [[1, 2], [10, 20]]


def test_calibrate_errors():
    with pytest.raises(ValueError):
        calibrate([])
    with pytest.raises(ValueError):
        calibrate([1, 2], sigmas=[1])
    with pytest.raises(ValueError):
        calibrate([1, 2], sigmas=[1, 0])
    with pytest.raises(ValueError):
        calibrate([1, 2], mondrian_bins=3, difficulty=[1, 2])
    with pytest.raises(ValueError):
        calibrate([1, 2], mondrian_bins=2)
    with pytest.raises(ValueError):
        calibrate([1, 2], sigmas=[1, 1], mondrian_bins=1, difficulty=[1, 2])


def test_rank_enumeration():
    # ceil((n + 1) * c) by enumeration over integers
    for n in range(1, 60):
        for c in (0.5, 0.8, 0.9, 0.95, 0.99):
            expected = min(r for r in range(1, n + 3) if r >= (n + 1) * c - 1e-9)
            assert conformal_rank(n, c) == expected
    assert conformal_rank(9, 0.9) == 9


def test_interval_examples():
    plain = calibrate(np.arange(1, 10))
    iv = interval(plain, 0.0, 0.9)
    assert (iv.lower, iv.upper) == (-9.0, 9.0)
    short = calibrate([1, 2, 3, 4])
    iv = interval(short, 0.0, 0.9)
    assert iv.lower == -math.inf and iv.upper == math.inf and not iv.bounded
    norm = calibrate(np.arange(1, 10), sigmas=np.ones(9))
    iv = interval(norm, 10.0, 0.9, sigma=0.5)
    assert (iv.lower, iv.upper) == (5.5, 14.5)


def test_interval_requires_mode_inputs():
    norm = calibrate([1, 2, 3], sigmas=[1, 1, 1])
    with pytest.raises(ValueError):
        interval(norm, 0.0, 0.5)
    mond = calibrate([1, 2, 3, 4], mondrian_bins=2, difficulty=[1, 2, 3, 4])
    with pytest.raises(ValueError):
        interval(mond, 0.0, 0.5)
    with pytest.raises(ValueError):
        interval(calibrate([1, 2]), 0.0, 1.0)


def test_mondrian_interval_uses_bin_scores():
    cr = calibrate(np.r_[np.arange(1, 10), np.arange(10, 100, 10)], mondrian_bins=2,
                   difficulty=np.r_[np.zeros(9), np.ones(9)])
    assert interval(cr, 0.0, 0.9, difficulty=0.0).upper == 9.0
    assert interval(cr, 0.0, 0.9, difficulty=1.0).upper == 90.0


def test_bins_boundary_goes_lower():
    edges = equal_frequency_edges([1, 2, 3, 4, 5, 6], 2)
    assert edges.tolist() == [3.0]
    assert assign_bins(edges, [3.0, 3.0001, -100, 100]).tolist() == [0, 1, 0, 1]


def test_bins_equal_counts_and_merging(rng):
    d = rng.normal(size=1000)
    edges = equal_frequency_edges(d, 10)
    counts = np.bincount(assign_bins(edges, d))
    assert counts.tolist() == [100] * 10
    with pytest.warns(UserWarning):
        edges = equal_frequency_edges([1, 1, 1, 1, 1, 2], 3)
    counts = np.bincount(assign_bins(edges, [1, 1, 1, 1, 1, 2]))
    assert np.all(counts > 0)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 10_000), c1=st.floats(0.05, 0.98), dc=st.floats(0.0, 0.5))
def test_nested_in_confidence(seed, c1, dc):
    c2 = min(c1 + dc, 0.999)
    r = np.random.default_rng(seed)
    y = r.normal(size=30)
    s = r.uniform(0.1, 3, 30)
    for cr, kw in (
        (calibrate(r.exponential(size=50)), {}),
        (calibrate(r.exponential(size=50), sigmas=r.uniform(0.1, 2, 50)), {"sigmas": s}),
        (calibrate(r.exponential(size=50), mondrian_bins=3, difficulty=r.uniform(size=50)),
         {"difficulties": r.uniform(size=30)}),
    ):
        lo1, hi1 = cr.interval_arrays(y, c1, **kw)
        lo2, hi2 = cr.interval_arrays(y, c2, **kw)
        assert np.all(lo2 <= lo1) and np.all(hi1 <= hi2)


def test_doubling_sigma_doubles_width(rng):
    cr = calibrate(rng.exponential(size=100), sigmas=rng.uniform(0.5, 2, 100))
    s = rng.uniform(0.1, 2, 20)
    # centred at zero the upper bound is the half-width itself
    _, hi1 = cr.interval_arrays(np.zeros(20), 0.9, s)
    _, hi2 = cr.interval_arrays(np.zeros(20), 0.9, 2 * s)
    assert np.array_equal(hi2, 2 * hi1)


def test_plain_equals_unit_sigma(rng):
    r = rng.exponential(size=200)
    y = rng.normal(size=50)
    plain = calibrate(r).interval_arrays(y, 0.9)
    norm = calibrate(r, sigmas=np.ones(200)).interval_arrays(y, 0.9, np.ones(50))
    assert np.array_equal(plain[0], norm[0]) and np.array_equal(plain[1], norm[1])


def test_batch_contracts(rng):
    cr = calibrate(rng.exponential(size=300), sigmas=rng.uniform(0.5, 2, 300))
    y = rng.normal(size=5000)
    s = rng.uniform(0.5, 2, 5000)
    assert interval_batch(cr, y[:1], 0.9, s[:1]) == [interval(cr, y[0], 0.9, s[0])]
    assert interval_batch(cr, [], 0.9, []) == []
    assert interval_batch(cr, y, 0.9, s, n_jobs=1) == interval_batch(cr, y, 0.9, s, n_jobs=4)


def test_coverage_on_exchangeable_data():
    covs = []
    for seed in range(20):
        r = np.random.default_rng(seed)
        cal, test = np.abs(r.normal(size=1000)), np.abs(r.normal(size=1000))
        lo, hi = calibrate(cal).interval_arrays(np.zeros(1000), 0.9)
        covs.append(np.mean((test >= lo) & (test <= hi)))
    assert 0.88 <= np.mean(covs) <= 0.92
