import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixapprox.precision import EXTENDED_DPS, Precision, as_precision, extended
from mixapprox.quadrature import integrate, panel_rule, refine_edges


def test_integrate_polynomial_exact():
    val, err = integrate(lambda x: x ** 6, -1.0, 2.0)
    assert val == pytest.approx((2 ** 7 + 1) / 7, rel=1e-14)
    assert err < 1e-10


def test_integrate_kink_with_points():
    val, _ = integrate(lambda x: np.abs(x - 0.3), 0.0, 1.0, points=[0.3])
    assert val == pytest.approx(0.5 * (0.3 ** 2 + 0.7 ** 2), rel=1e-14)


def test_integrate_infinite_gaussian():
    val, _ = integrate(lambda x: np.exp(-x * x / 2) / math.sqrt(2 * math.pi), -math.inf, math.inf)
    assert val == pytest.approx(1.0, rel=1e-12)


def test_integrate_reversed_limits():
    a, _ = integrate(np.cos, 0.0, 1.0)
    b, _ = integrate(np.cos, 1.0, 0.0)
    assert a == pytest.approx(-b)


def test_panel_rule_exact_for_low_degree():
    x, w = panel_rule([0.0, 0.5, 2.0], n=5)
    assert np.sum(w * x ** 9) == pytest.approx(2 ** 10 / 10, rel=1e-13)


def test_refine_edges():
    e = refine_edges([0.0, 1.0, 1.1], 0.25)
    assert e[0] == 0.0 and e[-1] == 1.1
    assert np.max(np.diff(e)) <= 0.25 + 1e-15


def test_precision_parsing():
    assert as_precision("double") is Precision.DOUBLE
    assert as_precision("Extended") is Precision.EXTENDED
    with pytest.raises(ValueError):
        as_precision("quad")
    import mpmath
    with extended():
        assert mpmath.mp.dps == EXTENDED_DPS


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 4))
def test_integrate_gaussian_cdf_property(a, w):
    from scipy.special import ndtr
    val, _ = integrate(lambda x: np.exp(-x * x / 2) / math.sqrt(2 * math.pi), a, a + w)
    assert val == pytest.approx(ndtr(a + w) - ndtr(a), abs=1e-14)
