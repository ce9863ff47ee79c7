import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from mixapprox.errors import ValidationError
from mixapprox.laws import Atomic, Gaussian, Uniform
from mixapprox.npmle import (
    BoundedSupport,
    NpmleProblem,
    SubWeibullSupport,
    constraint_from_dict,
    default_grid,
    draw_sample,
    hellinger,
    npmle_fit,
    rate_reference,
    rate_scan,
)


def em_oracle(x, grid, iters=200_000):
    """Plain EM on the grid; slow but obviously correct."""
    K = norm.pdf(x[:, None] - grid[None, :])
    w = np.full(grid.size, 1.0 / grid.size)
    for _ in range(iters):
        f = K @ w
        w = w * (K / f[:, None]).mean(axis=0)
    return w, float(np.mean(np.log(K @ w)))


def test_single_point_sample():
    fit = npmle_fit(NpmleProblem(np.array([0.0]), np.array([-1.0, 0.0, 1.0])))
    assert fit.weights == pytest.approx([0.0, 1.0, 0.0], abs=1e-8)
    assert fit.converged


def test_matches_em_oracle():
    x = draw_sample(Atomic((-1.0, 1.5), (0.4, 0.6)), 60, seed=3)
    grid = np.linspace(-3, 4, 15)
    fit = npmle_fit(NpmleProblem(x, grid), tol=1e-10)
    _, ll = em_oracle(x, grid, 20_000)
    assert fit.loglik >= ll - 1e-9
    assert fit.loglik == pytest.approx(ll, abs=1e-6)


def test_kkt_conditions():
    x = draw_sample(Uniform(1.0), 500, seed=1)
    problem = NpmleProblem.from_sample(x, BoundedSupport(1.0))
    fit = npmle_fit(problem)
    assert fit.converged and fit.gradient_slack <= 1e-8
    K = norm.pdf(problem.sample[:, None] - problem.grid[None, :])
    D = (K / (K @ fit.weights)[:, None]).mean(axis=0)
    assert D.max() <= 1 + 1e-7
    assert np.all(np.abs(D[fit.weights > 1e-6] - 1) < 1e-5)
    assert np.all(np.diff(fit.loglik_trace) >= 0)
    assert fit.weights.sum() == pytest.approx(1.0)


def test_point_mass_truth_recovered():
    x = draw_sample(Atomic.point(0.0), 2000, seed=5)
    fit = npmle_fit(NpmleProblem.from_sample(x, BoundedSupport(2.0)))
    assert hellinger(fit.to_law(), Atomic.point(0.0)) < 0.02


def test_grid_construction():
    g = default_grid(np.array([-0.3, 0.4]), BoundedSupport(1.0))
    assert g[0] == -1.0 and g[-1] == 1.0
    assert np.all(np.diff(g) > 0)
    g2 = default_grid(np.array([0.0]), None, step=0.5, pad=1.0)
    assert g2.tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]
    lo, hi = SubWeibullSupport(2.0, 1.0).interval
    assert hi == pytest.approx(math.sqrt(math.log(2e8)))
    with pytest.raises(ValidationError):
        NpmleProblem(np.array([0.0]), np.array([-2.0, 0.0]), BoundedSupport(1.0))
    with pytest.raises(ValidationError):
        NpmleProblem(np.array([0.0]), np.array([1.0, 0.0]))
    with pytest.raises(ValidationError):
        NpmleProblem(np.array([]), np.array([0.0]))


def test_constraint_round_trip():
    for c in (BoundedSupport(2.0), SubWeibullSupport(1.5, 1.0, 1e-6)):
        assert constraint_from_dict(c.to_dict()) == c
    with pytest.raises(ValidationError):
        constraint_from_dict({"kind": "box"})
    with pytest.raises(ValidationError):
        BoundedSupport(-1.0)


def test_rate_reference():
    L = math.log(8000)
    assert rate_reference(8000, BoundedSupport(1.0)) == pytest.approx(0.0853562173339975, rel=1e-14)
    assert rate_reference(8000, BoundedSupport(1.0)) == pytest.approx(L / math.sqrt(8000 * math.log1p(math.sqrt(L))))
    sw = rate_reference(8000, SubWeibullSupport(2.0, 1.0))
    assert sw == pytest.approx(L / math.sqrt(8000 * math.log(2.0)))
    with pytest.raises(ValidationError):
        rate_reference(1, BoundedSupport(1.0))


def test_draw_sample_deterministic():
    a = draw_sample(Gaussian(1.0), 100, seed=9)
    assert np.array_equal(a, draw_sample(Gaussian(1.0), 100, seed=9))
    assert not np.array_equal(a, draw_sample(Gaussian(1.0), 100, seed=10))


def test_rate_scan_decreases_and_is_deterministic():
    t1 = rate_scan(Uniform(1.0), BoundedSupport(1.0), [200, 3200], 3, seed=7)
    t2 = rate_scan(Uniform(1.0), BoundedSupport(1.0), [200, 3200], 3, seed=7, workers=2)
    assert t1 == t2
    assert t1.rows[1].mean_h < t1.rows[0].mean_h
    assert all(r.monotone for r in t1.replicates)
    assert len(t1.replicates) == 6
    with pytest.raises(ValidationError):
        rate_scan(Uniform(1.0), BoundedSupport(1.0), [400, 200], 2, seed=0)
    with pytest.raises(ValidationError):
        rate_scan(Uniform(1.0), BoundedSupport(1.0), [200], 0, seed=0)


@settings(max_examples=15, deadline=None)
@given(st.integers(5, 80), st.integers(0, 2 ** 31))
def test_fit_is_optimal_property(n, seed):
    x = np.random.default_rng(seed).normal(size=n) * 1.5
    problem = NpmleProblem(x, np.linspace(-4, 4, 17))
    fit = npmle_fit(problem)
    assert fit.converged
    assert np.all(fit.weights >= 0) and fit.weights.sum() == pytest.approx(1.0)
    assert np.all(np.diff(fit.loglik_trace) >= 0)
    # no single-atom direction improves the likelihood to first order
    K = norm.pdf(problem.sample[:, None] - problem.grid[None, :])
    for j in range(0, 17, 4):
        e = np.zeros(17)
        e[j] = 1.0
        w = 0.999 * fit.weights + 0.001 * e
        assert np.mean(np.log(K @ w)) <= fit.loglik + 1e-9
