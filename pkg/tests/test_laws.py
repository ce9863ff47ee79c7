import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixapprox.errors import DegenerateInputError, UnsupportedLawError, ValidationError
from mixapprox.laws import (
    Arc,
    Atomic,
    Conditioned,
    Gaussian,
    Laplace,
    Scaled,
    SubWeibull,
    TruncPareto,
    Uniform,
    condition,
    law_from_dict,
    orlicz_parameters,
    scale,
    subweibull_normalizer,
    tail_probability_bound,
)
from mixapprox.precision import Precision

LAWS = [
    Uniform(1.0),
    Gaussian(1.0),
    Laplace(1.0),
    SubWeibull(1.5, 1.0),
    SubWeibull(0.7, 2.0),
    Arc(1.0),
    Atomic((-1.0, 0.5), (0.25, 0.75)),
    TruncPareto.normalized(2.0, 0.5, 20.0),
    Conditioned(Gaussian(1.0), -0.5, 2.0),
    Scaled(Arc(0.8), 2.5),
]


def test_atomic_validation():
    with pytest.raises(ValidationError):
        Atomic((0.0, 1.0), (0.5, 0.6))
    with pytest.raises(ValidationError):
        Atomic((0.0,), (-1.0,))
    with pytest.raises(ValidationError):
        Atomic((), ())


def test_atomic_from_arrays_merges_and_sorts():
    a = Atomic.from_arrays([1.0, -1.0, 1.0], [0.2, 0.5, 0.3])
    assert a.atoms == (-1.0, 1.0)
    assert a.weights == pytest.approx((0.5, 0.5))


def test_uniform_moments_closed_form():
    u = Uniform(2.0)
    assert u.moment(2) == pytest.approx(4 / 3, rel=1e-15)
    assert u.moment(3) == 0.0
    assert u.moment(4) == pytest.approx(16 / 5, rel=1e-15)


def test_gaussian_moments():
    g = Gaussian(2.0)
    assert g.moment(4) == pytest.approx(3 * 16, rel=1e-15)
    assert g.moment(6) == pytest.approx(15 * 64, rel=1e-15)


def test_laplace_moment():
    assert Laplace(1.0).moment(4) == pytest.approx(24.0, rel=1e-14)


def test_subweibull_against_quadrature_oracle():
    # mpmath quadrature of the density, 40 digits
    sw = SubWeibull(1.5, 1.0)
    assert sw.moment(2) == pytest.approx(0.7384881116216483129, rel=1e-13)
    assert sw.char_fn(1.0).real == pytest.approx(0.7031015314341731033, rel=1e-12)
    assert float(sw.cdf(0.7)) == pytest.approx(0.8113904762072527029, rel=1e-13)


def test_arc_against_quadrature_oracle():
    arc = Arc(1.0)
    assert arc.moment(2) == pytest.approx(0.2394082475134590862, rel=1e-12)
    assert arc.char_fn(3.0).real == pytest.approx(0.2523055737123278456, rel=1e-11)


def test_subweibull_normalizer():
    assert subweibull_normalizer(2.0) == pytest.approx(1 / math.sqrt(math.pi))
    assert subweibull_normalizer(1.0) == pytest.approx(0.5)


def test_truncpareto_moment_constrained():
    law = TruncPareto.moment_constrained(2.0, 1.0, 60)
    # E|X|^alpha <= beta^alpha by construction
    assert law.moment(2) <= 1.0 + 1e-9
    with pytest.raises(ValidationError):
        TruncPareto.moment_constrained(2.0, 1.0, 2)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: type(l).__name__)
def test_char_fn_zero_and_conjugate(law):
    assert law.char_fn(0.0) == pytest.approx(1.0)
    assert law.char_fn(-0.7) == pytest.approx(np.conj(law.char_fn(0.7)), abs=1e-14)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: type(l).__name__)
def test_extended_moment_matches_double(law):
    for k in (1, 2, 4):
        d = law.moment(k)
        e = law.moment(k, Precision.EXTENDED)
        assert float(e) == pytest.approx(d, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("law", [l for l in LAWS if l.has_density], ids=lambda l: type(l).__name__)
def test_pdf_integrates_to_one(law):
    lo, hi = law.effective_support(1e-14)
    pts = [lo, *[p for p in law.breakpoints if lo < p < hi], hi]
    total = sum(mpmath.quad(lambda x: float(law.pdf(np.array([float(x)]))[0]), [a, b])
                for a, b in zip(pts, pts[1:]))
    assert float(total) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("law", LAWS, ids=lambda l: type(l).__name__)
def test_sample_is_deterministic(law):
    a = law.sample(50, seed=4)
    b = law.sample(50, seed=4)
    assert np.array_equal(a, b)
    lo, hi = law.support
    assert np.all(a >= lo) and np.all(a <= hi)


def test_sample_mean_subweibull():
    x = SubWeibull(1.5, 1.0).sample(200000, seed=1)
    assert abs(x.mean()) < 0.01
    assert x.var() == pytest.approx(0.7384881116216483, rel=0.02)


def test_scale_collapses_closed_forms():
    assert scale(Uniform(1.0), 3.0) == Uniform(3.0)
    assert scale(Gaussian(1.0), -2.0) == Gaussian(2.0)
    assert isinstance(scale(Arc(1.0), 2.0), Scaled)


def test_condition():
    c = condition(Uniform(1.0), 0.0, 1.0)
    assert c.moment(1) == pytest.approx(0.5)
    a = condition(Atomic((-1.0, 0.0, 1.0), (0.2, 0.3, 0.5)), -0.5, 2.0)
    assert a.atoms == (0.0, 1.0)
    assert a.weights == pytest.approx((0.375, 0.625))
    with pytest.raises(DegenerateInputError):
        condition(Uniform(1.0), 2.0, 3.0)


def test_tail_bound_and_orlicz():
    assert orlicz_parameters(Gaussian(1.0)) == pytest.approx((2.0, math.sqrt(2)))
    assert orlicz_parameters(Laplace(2.0)) == pytest.approx((1.0, 2.0))
    with pytest.raises(UnsupportedLawError):
        orlicz_parameters(Uniform(1.0))
    for law in (Gaussian(1.0), Laplace(1.0), SubWeibull(1.5, 1.0), SubWeibull(0.5, 1.0)):
        for t in (0.5, 1.0, 3.0):
            exact = law.mass(-math.inf, -t) + law.mass(t, math.inf)
            assert exact <= tail_probability_bound(law, t) + 1e-15


@pytest.mark.parametrize("law", LAWS, ids=lambda l: type(l).__name__)
def test_dict_round_trip(law):
    assert law_from_dict(law.to_dict()) == law


def test_law_from_dict_rejects_unknown():
    with pytest.raises(ValidationError):
        law_from_dict({"kind": "cauchy"})
    with pytest.raises(ValidationError):
        law_from_dict({"kind": "uniform"})


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 5.0), st.integers(0, 8))
def test_scaled_moment_homogeneity(c, k):
    law = SubWeibull(1.5, 1.0)
    assert Scaled(law, c).moment(k) == pytest.approx(c ** k * law.moment(k), rel=1e-10, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.floats(-6, 6), st.floats(0.01, 3.0))
def test_cdf_ppf_round_trip(x, sd):
    g = Gaussian(sd)
    u = float(g.cdf(x))
    if 1e-12 < u < 1 - 1e-12:
        assert float(g.ppf(u)) == pytest.approx(x, abs=1e-8 * max(1, sd))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6), st.floats(0.05, 3.0))
def test_atomic_trig_moment_bounded(atoms, delta):
    law = Atomic.from_arrays(atoms)
    for k in range(4):
        assert abs(law.trig_moment(k, delta)) <= 1 + 1e-14
