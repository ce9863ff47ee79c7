import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from mixapprox.errors import OutOfRegimeError, ValidationError
from mixapprox.laws import Arc, Atomic, Conditioned, Gaussian, Laplace, SubWeibull, TruncPareto, Uniform
from mixapprox.mixtures import (
    MixtureDensity,
    chi2_moment_bound,
    divergence,
    fdiv_chain_check,
    log_chi2_moment_bound,
    mixture_density,
    tv_char_fn_lower,
)
from mixapprox.quadrature import integrate

ALL = [Uniform(1.0), Gaussian(1.0), Laplace(1.0), SubWeibull(1.5, 1.0), Arc(1.0),
       Atomic((-1.0, 2.0), (0.4, 0.6)), TruncPareto.normalized(2.0, 0.5, 20.0),
       Conditioned(Gaussian(1.0), -0.5, 2.0), Conditioned(Uniform(2.0), 0.0, 1.0)]


def test_density_values():
    assert mixture_density(Atomic.point(0.0), 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)
    assert mixture_density(Gaussian(1.0), 0.0) == pytest.approx(1 / math.sqrt(4 * math.pi), rel=1e-15)
    assert mixture_density(Uniform(1.0), 0.0) == pytest.approx(ndtr(1) - 0.5, rel=1e-14)


def test_laplace_density_against_oracle():
    # mpmath convolution integral at x = 0.5
    assert mixture_density(Laplace(1.0), 0.5) == pytest.approx(0.24506916997266492346, rel=1e-13)


def test_noise_scale():
    f = MixtureDensity(Atomic.point(0.0), noise_scale=2.0)
    assert f(np.array([0.0]))[0] == pytest.approx(1 / (2 * math.sqrt(2 * math.pi)))


@pytest.mark.parametrize("law", ALL, ids=lambda l: type(l).__name__)
def test_density_integrates_to_one(law):
    f = MixtureDensity(law)
    lo, hi = f.window
    val, _ = integrate(f, lo, hi, points=[p for p in law.breakpoints if lo < p < hi])
    assert val == pytest.approx(1.0, abs=1e-10)


def test_closed_form_pairs():
    a, b = Atomic.point(0.0), Atomic.point(2.0)
    assert divergence("tv", a, b).value == pytest.approx(2 * ndtr(1) - 1, rel=1e-12)
    a1 = Atomic.point(1.0)
    assert divergence("chi2", a1, a).value == pytest.approx(math.e - 1, rel=1e-10)
    assert divergence("kl", a1, a).value == pytest.approx(0.5, rel=1e-10)
    assert divergence("h2", a1, a).value == pytest.approx(2 * (1 - math.exp(-1 / 8)), rel=1e-10)


def test_uniform_vs_gaussian_against_oracle():
    # mpmath at 30-40 digits, split at the density crossings
    U, G = Uniform(1.0), Gaussian(1.0)
    assert divergence("tv", U, G).value == pytest.approx(0.094882282960633967139, rel=1e-11)
    assert divergence("chi2", U, G).value == pytest.approx(0.059488252379821626151, rel=1e-10)
    assert divergence("h2", U, G).value == pytest.approx(0.020780734932295635003, rel=1e-10)
    assert divergence("kl", U, G).value == pytest.approx(0.036195797402648232402, rel=1e-10)


def test_identical_is_zero_and_kinds():
    assert divergence("tv", Uniform(1.0), Uniform(1.0)).value == 0.0
    with pytest.raises(ValidationError):
        divergence("js", Uniform(1.0), Gaussian(1.0))
    d = divergence("hellinger", Uniform(1.0), Gaussian(1.0))
    assert d.kind == "h2"
    assert set(d.to_dict()) == {"kind", "value", "abs_err"}


def test_chi2_moment_bound():
    assert chi2_moment_bound(1.0, 16) == pytest.approx(0.013644545738542002542, rel=1e-13)
    assert chi2_moment_bound(1.0, 5) == pytest.approx(320.72260945735894685, rel=1e-13)
    assert log_chi2_moment_bound(1.0, 16) == pytest.approx(math.log(0.013644545738542002542))
    with pytest.raises(OutOfRegimeError):
        chi2_moment_bound(1.0, 4)


@pytest.mark.parametrize("P,Q", [
    (Uniform(1.0), Gaussian(1.0)),
    (Atomic((-0.5, 0.5), (0.5, 0.5)), Uniform(1.0)),
    (Laplace(1.0), SubWeibull(1.5, 1.0)),
    (Atomic.point(0.0), Atomic.point(3.0)),
])
def test_divergence_chain(P, Q):
    rep = fdiv_chain_check(P, Q)
    assert rep.passed, [(l.lhs, l.rhs, l.lhs_value, l.rhs_value) for l in rep.links]


def test_char_fn_lower_bound():
    P, Q = Uniform(1.0), Gaussian(1.0)
    lb = tv_char_fn_lower(P, Q, np.linspace(0.1, 4, 40))
    assert 0 < lb <= divergence("tv", P, Q).value


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=1, max_size=4), st.lists(st.floats(-3, 3), min_size=1, max_size=4))
def test_tv_symmetric_and_bounded(a, b):
    P, Q = Atomic.from_arrays(a), Atomic.from_arrays(b)
    t1 = divergence("tv", P, Q).value
    t2 = divergence("tv", Q, P).value
    assert t1 == pytest.approx(t2, abs=1e-12)
    assert 0.0 <= t1 <= 1.0


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=3), st.floats(0.3, 2.0))
def test_chain_property(atoms, sd):
    assert fdiv_chain_check(Atomic.from_arrays(atoms), Gaussian(sd)).passed
