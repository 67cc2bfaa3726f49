import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strangecp.difficulty import (
    SIGMA_MIN,
    DifficultyKind,
    DifficultySpec,
    estimate_residual,
    estimate_std,
    estimate_target_strangeness,
    estimate_variance,
    fit_difficulty,
    sigmas_from_neighbors,
)
from strangecp.neighbors import fit_neighbors

TS_LOWER = 1 - 1 / (0.75 * math.sqrt(2 * math.pi))  # 0.46808


def one_hood(targets, residuals=None):
    """A model whose only neighbourhood (k = all rows) is ``targets``."""
    n = len(targets)
    return fit_neighbors(np.zeros((n, 1)), targets, residuals, k=n)


def test_std_examples():
    assert estimate_std(one_hood([1, 2, 3]), [[0.0]], beta=0)[0] == pytest.approx(0.816496580927726, rel=1e-12)
    assert estimate_std(one_hood([5, 5, 5]), [[0.0]], beta=0.01)[0] == pytest.approx(0.01)
    assert estimate_std(one_hood([5, 5, 5]), [[0.0]], beta=0)[0] == SIGMA_MIN


def test_variance_examples():
    assert estimate_variance(one_hood([1, 2, 3]), [[0.0]], beta=0)[0] == pytest.approx(2 / 3, rel=1e-12)
    assert estimate_variance(one_hood([5, 5, 5]), [[0.0]], beta=0.01)[0] == pytest.approx(0.01)


def test_variance_is_std_squared(rng):
    t = rng.normal(size=(200, 12))
    s = sigmas_from_neighbors("std", t, beta=0)
    v = sigmas_from_neighbors("var", t, beta=0)
    np.testing.assert_allclose(v, s ** 2, rtol=1e-12)


def test_residual_examples():
    assert estimate_residual(one_hood([0, 0], [0.1, 0.3]), [[0.0]], beta=0)[0] == pytest.approx(0.2)
    assert estimate_residual(one_hood([0, 0], [0.0, 0.0]), [[0.0]], beta=0.01)[0] == pytest.approx(0.01)
    with pytest.raises(ValueError):
        estimate_residual(one_hood([0, 0]), [[0.0]], beta=0)


def test_target_strangeness_examples():
    got = estimate_target_strangeness(one_hood([4.0, 4.0, 4.0]), [[0.0]], [4.0], 0.75, beta=0)
    assert got[0] == pytest.approx(0.46807695946475636, rel=1e-12)
    got = estimate_target_strangeness(one_hood([0.0, 1.0]), [[0.0]], [0.5], 0.75, beta=0)
    assert got[0] == pytest.approx(0.574069325970197, rel=1e-12)
    far = estimate_target_strangeness(one_hood([0.0, 0.1]), [[0.0]], [1000.0], 0.75, beta=0)
    assert far[0] == 1.0


def test_target_strangeness_follows_algorithm(rng):
    # per query: neighbours' targets -> KDE -> density at y_hat -> 1 - density + beta
    ref = rng.normal(size=(80, 2))
    y = rng.normal(size=80)
    model = fit_neighbors(ref, y, k=7)
    q = rng.normal(size=(30, 2))
    y_hat = rng.normal(size=30)
    got = estimate_target_strangeness(model, q, y_hat, 0.75, beta=0.01)
    for i in range(30):
        d = np.sqrt(((ref - q[i]) ** 2).sum(axis=1))
        nn = np.argsort(d, kind="stable")[:7]
        dens = np.mean(np.exp(-0.5 * ((y_hat[i] - y[nn]) / 0.75) ** 2)) / (0.75 * math.sqrt(2 * math.pi))
        assert got[i] == pytest.approx(1 - dens + 0.01, rel=1e-12)


def test_target_strangeness_errors():
    model = one_hood([0.0, 1.0])
    with pytest.raises(ValueError):
        estimate_target_strangeness(model, [[0.0], [0.0]], [0.5], 0.75)
    with pytest.raises(ValueError):
        estimate_target_strangeness(model, [[0.0]], [float("inf")], 0.75)
    with pytest.raises(ValueError):
        estimate_target_strangeness(model, [[0.0]], [0.5], 0.0)


def test_positivity_fuzzed(rng):
    for kind in DifficultyKind:
        t = rng.normal(0, rng.uniform(0, 2, (10_000, 1)), (10_000, 5))
        t[:2000] = 3.0  # constant neighbourhoods
        res = np.abs(rng.normal(size=(10_000, 5)))
        res[:2000] = 0.0
        y_hat = rng.normal(0, 2, 10_000)
        s = sigmas_from_neighbors(kind, t, res, y_hat, beta=0.0, bandwidth=0.1)
        assert np.all(s > 0)


def test_strangeness_bounds_fuzzed(rng):
    t = rng.normal(rng.normal(0, 2, (10_000, 1)), rng.uniform(0, 2, (10_000, 1)), (10_000, 10))
    y_hat = rng.normal(0, 3, 10_000)
    s = sigmas_from_neighbors("targ-strg", t, y_hats=y_hat, beta=0.0, bandwidth=0.75)
    assert s.min() >= TS_LOWER - 1e-15 and s.max() <= 1.0


@settings(max_examples=100, deadline=None)
@given(y1=st.floats(-5, 5), a=st.floats(0, 6), b=st.floats(0, 6))
def test_single_neighbour_monotone(y1, a, b):
    lo, hi = sorted([a, b])
    s = sigmas_from_neighbors("targ-strg", [[y1], [y1]], y_hats=[y1 + lo, y1 - hi], beta=0)
    assert s[0] <= s[1]


@settings(max_examples=100, deadline=None)
@given(c=st.floats(-100, 100), seed=st.integers(0, 1000))
def test_shift_equivariance(c, seed):
    r = np.random.default_rng(seed)
    t = r.normal(size=(20, 6))
    y_hat = r.normal(size=20)
    base = sigmas_from_neighbors("targ-strg", t, y_hats=y_hat, beta=0)
    shifted = sigmas_from_neighbors("targ-strg", t + c, y_hats=y_hat + c, beta=0)
    np.testing.assert_allclose(shifted, base, atol=1e-12)
    for kind in ("std", "var"):
        np.testing.assert_allclose(sigmas_from_neighbors(kind, t + c, beta=0),
                                   sigmas_from_neighbors(kind, t, beta=0), atol=1e-10)


def test_dispatch_equality(rng):
    x = rng.normal(size=(200, 3))
    y = rng.normal(size=200)
    res = np.abs(rng.normal(size=200))
    q = rng.normal(size=(40, 3))
    y_hat = rng.normal(size=40)
    model = fit_neighbors(x, y, res, k=50)
    expected = {
        "std": estimate_std(model, q, 0.01),
        "var": estimate_variance(model, q, 0.01),
        "res": estimate_residual(model, q, 0.01),
        "targ-strg": estimate_target_strangeness(model, q, y_hat, 0.75, 0.01),
    }
    for kind, want in expected.items():
        est = fit_difficulty(DifficultySpec(kind, k=50), x, y, res)
        assert np.array_equal(est.estimate(q, y_hat), want)


def test_fit_difficulty_contracts(rng):
    x = rng.normal(size=(60, 2))
    y = rng.normal(size=60)
    with pytest.raises(ValueError):
        fit_difficulty(DifficultySpec("res", k=5), x, y)
    est = fit_difficulty(DifficultySpec("targ-strg", k=5), x, y)
    with pytest.raises(ValueError):
        est.estimate(x[:3])
    with pytest.raises(ValueError):
        DifficultySpec("std", k=5, beta=-1)
    assert DifficultyKind.parse("target_strangeness") is DifficultyKind.TARGET_STRANGENESS
