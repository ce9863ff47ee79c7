import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixapprox.certificates import lambda_min, trig_moment_matrix
from mixapprox.errors import ValidationError
from mixapprox.laws import Arc, Gaussian
from mixapprox.orthopoly import (
    PolySeq,
    arc_coeff_matrix,
    arc_opuc,
    arc_r_chain,
    euler_function_bound,
    opuc_coeff_matrix,
    opuc_from_moments,
    orthonormality_defect,
    q_binomial,
    q_pochhammer,
    rogers_szego_coeff_matrix,
    rogers_szego_frobenius_bound,
    rogers_szego_verblunsky,
    wrapped_gaussian_density,
)


def test_family_values():
    assert PolySeq("hermite").eval(3, 2.0) == pytest.approx(2.0)
    assert PolySeq("legendre_scaled").eval(2, 1.0) == pytest.approx(math.sqrt(5))
    assert PolySeq("chebyshev_u").eval(3, 0.5) == pytest.approx(-1.0)
    rs = PolySeq("rogers_szego", q=math.exp(-1))
    # orthonormal phi_1(1) = (1 - sqrt q) / sqrt(1 - q)
    q = math.exp(-1)
    assert rs.eval(1, 1.0).real == pytest.approx((1 - math.sqrt(q)) / math.sqrt(1 - q))
    assert rs.eval(1, 1.0).real == pytest.approx(0.49489277, rel=1e-6)


def test_unknown_family():
    with pytest.raises(ValidationError):
        PolySeq("laguerre")


def test_q_pochhammer():
    assert q_pochhammer(0.5) == pytest.approx(float(mpmath.qp(0.5)), rel=1e-14)
    assert q_pochhammer(0.5, 3) == pytest.approx(0.5 * 0.75 * 0.875)
    # [4 choose 2]_q = (1 + q^2)(1 + q + q^2)
    assert q_binomial(4, 2, 0.5) == pytest.approx(1.25 * 1.75, rel=1e-14)
    assert 1 / q_pochhammer(0.9) <= euler_function_bound(0.9)


@pytest.mark.parametrize("seq", [PolySeq("hermite"), PolySeq("legendre_scaled"), PolySeq("chebyshev_u"),
                                 PolySeq("rogers_szego", q=0.4)], ids=lambda s: s.family)
def test_orthonormality(seq):
    assert orthonormality_defect(seq, 10) < 1e-10


@pytest.mark.parametrize("seq", [PolySeq("hermite"), PolySeq("legendre_scaled"), PolySeq("chebyshev_u"),
                                 PolySeq("rogers_szego", q=0.4)], ids=lambda s: s.family)
def test_recurrence_matches_closed_form(seq):
    pts = np.exp(1j * np.linspace(0, 6, 7)) if seq.on_circle else np.linspace(-0.9, 0.9, 7)
    for n in range(12):
        a = seq.eval(n, pts)
        b = seq.eval_closed_form(n, pts)
        assert np.allclose(a, b, rtol=1e-9, atol=1e-9)


def test_rogers_szego_m1():
    q = math.exp(-1)
    R = rogers_szego_coeff_matrix(q, 1)
    # phi_1 = (z - sqrt q) / sqrt(1 - q): 1 + (1 + q) / (1 - q)
    assert R.frobenius_sq == pytest.approx(3.1639534137386528488, rel=1e-14)
    assert 1 / R.frobenius_sq == pytest.approx(0.31606027941427883920, rel=1e-14)
    assert rogers_szego_verblunsky(q, 0) == pytest.approx(math.sqrt(q))


@pytest.mark.parametrize("q", [0.2, 0.5, 0.8])
def test_rogers_szego_frobenius_bound(q):
    for m in (1, 4, 10):
        assert rogers_szego_coeff_matrix(q, m).frobenius_sq <= rogers_szego_frobenius_bound(q, m)


def test_generic_cholesky_matches_rogers_szego():
    q = 0.6
    m = 6
    law = Gaussian(math.sqrt(-math.log(q)))
    t = [law.char_fn(k) for k in range(m + 1)]
    generic = opuc_from_moments(t, m)
    explicit = rogers_szego_coeff_matrix(q, m)
    assert np.allclose(np.abs(generic.R), np.abs(explicit.R), atol=1e-12)


def test_wrapped_gaussian_density_normalized():
    theta = np.linspace(0, 2 * math.pi, 2001)[:-1]
    for var in (0.3, 2.0):
        f = wrapped_gaussian_density(theta, var)
        assert f.mean() * 2 * math.pi == pytest.approx(1.0, rel=1e-12)


def test_arc_r_chain():
    assert arc_r_chain(2.0, 2) == pytest.approx((2.0, 1.875, 1.8666666666666667))


@pytest.mark.parametrize("b", [0.5, 1.0, 2.0])
def test_arc_matches_cholesky(b):
    gamma = math.sin(b / 2)
    m = 4
    explicit = arc_coeff_matrix(gamma, m)
    law = Arc(b)
    t = [law.char_fn(k) for k in range(m + 1)]
    generic = opuc_from_moments(t, m)
    assert np.allclose(explicit.R, generic.R, rtol=1e-8, atol=1e-8 * np.abs(explicit.R).max())


@pytest.mark.parametrize("b", [0.5, 1.0])
def test_arc_bound_chain(b):
    gamma = math.sin(b / 2)
    for m in (2, 4, 6):
        R = arc_coeff_matrix(gamma, m)
        info = arc_opuc(gamma, m)
        lam = lambda_min(trig_moment_matrix(Arc(b), m, 1.0))
        assert R.frobenius_sq <= info.frobenius_bound * (1 + 1e-10)
        assert info.frobenius_bound <= info.closed_bound * (1 + 1e-12)
        assert 1 / R.frobenius_sq <= lam + 1e-9


def test_opuc_coeff_matrix_dispatch():
    assert opuc_coeff_matrix("rogers_szego", 2, q=0.3).order == 3
    assert opuc_coeff_matrix("arc", 2, b=1.0).order == 3
    with pytest.raises(ValidationError):
        opuc_coeff_matrix("arc", 41, b=1.0)
    with pytest.raises(ValidationError):
        arc_opuc(1.2, 2)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 0.95), st.integers(1, 8))
def test_rs_inverse_frobenius_is_eigen_lower_bound(q, m):
    sigma = math.sqrt(-math.log(q))
    lam = np.linalg.eigvalsh(trig_moment_matrix(Gaussian(sigma), m, 1.0).matrix)[0]
    assert 1 / rogers_szego_coeff_matrix(q, m).frobenius_sq <= lam + 1e-9
