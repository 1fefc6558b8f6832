import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from multisum import GrowthBound, ParameterError, XiSeries, conv, conv_numeric, conv_power


def test_beta_rule_on_basis():
    for k in (0.5, 1.0, 2.0):
        for a, b in [(1, 1), (2, 5), (7, 3)]:
            out = conv(XiSeries.basis(a, k, 12), XiSeries.basis(b, k, 12))
            assert out == XiSeries.basis(a + b, k, 12)


def test_conv_truncates_past_order():
    out = conv(XiSeries.basis(4, 1.0, 6), XiSeries.basis(3, 1.0, 6))
    assert out.is_zero()


def test_conv_level_mismatch():
    with pytest.raises(ParameterError):
        conv(XiSeries.basis(1, 1.0, 4), XiSeries.basis(1, 2.0, 4))


def test_conv_power_needs_factors():
    with pytest.raises(ParameterError):
        conv_power([])
    e1 = XiSeries.basis(1, 1.0, 6)
    assert conv_power([e1, e1, e1]) == XiSeries.basis(3, 1.0, 6)


@given(
    st.lists(st.floats(-10, 10), min_size=4, max_size=4),
    st.lists(st.floats(-10, 10), min_size=4, max_size=4),
    st.sampled_from([0.5, 1.0, 2.0]),
)
def test_conv_commutes(a, b, k):
    f, g = XiSeries.scalar(k, a, order=8), XiSeries.scalar(k, b, order=8)
    assert np.allclose(conv(f, g).data, conv(g, f).data, rtol=1e-13, atol=1e-12)


@pytest.mark.parametrize("k", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("a,b", [(1, 2), (2, 2), (3, 1)])
def test_numeric_convolution_matches_beta_rule(k, a, b):
    e = lambda n: (lambda z: z ** (n - k) / math.gamma(n / k))
    xi = 0.8 * np.exp(0.2j)
    val, err = conv_numeric(e(a), e(b), k, xi, powers=(a - k, b - k))
    exact = e(a + b)(xi)
    assert abs(val - exact) <= 1e-12 * abs(exact)
    assert err < 1e-10


def test_numeric_convolution_estimates_powers():
    k = 1.0
    val, _ = conv_numeric(lambda z: 1.0 / (1.0 + z), lambda z: np.ones_like(z), k, 0.5)
    # 1/(1+xi) * 1 = log(1+xi) at level 1
    assert val == pytest.approx(math.log(1.5), rel=1e-12)


def test_growth_bound_convolution():
    a = GrowthBound(2.0, 1.0, 0.3, 1.0)
    b = GrowthBound(3.0, 2.0, 0.3, 1.0)
    ab = a.convolved(b)
    assert (ab.C, ab.s) == (6.0, 3.0)
    with pytest.raises(ParameterError):
        a.convolved(GrowthBound(1.0, 1.0, 0.5, 1.0))
