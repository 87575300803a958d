import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from moebius_curves.elliptic import (
    EllipticModulus,
    agm,
    carlson_rf,
    complete_first_kind,
    incomplete_first_kind,
    incomplete_first_kind_phi,
    inverse_sd,
    jacobi_sd,
    jacobi_sd_derivative,
    jacobi_sn_cn_dn,
)

moduli = st.floats(0.0, 0.999)
args = st.floats(-20.0, 20.0)


def test_lemniscatic_complete_integral():
    k = 1 / math.sqrt(2)
    expect = math.gamma(0.25) ** 2 / (4 * math.sqrt(math.pi))
    assert abs(complete_first_kind(k) - expect) < 1e-14


@given(moduli)
def test_complete_integral_vs_scipy(k):
    assert np.isclose(complete_first_kind(k), special.ellipk(k * k), rtol=1e-13)


def test_complete_integral_limits():
    assert complete_first_kind(0.0) == pytest.approx(math.pi / 2, abs=1e-15)
    assert complete_first_kind(1.0) == float("inf")
    with pytest.raises(ValueError):
        EllipticModulus(1.5)


def test_agm_value():
    assert agm(1.0, 2.0) == pytest.approx(1.4567910310469068, abs=1e-15)
    with pytest.raises(ValueError):
        agm(-1.0, 1.0)


@given(args, moduli)
def test_jacobi_vs_scipy(u, k):
    sn, cn, dn = jacobi_sn_cn_dn(u, k)
    ref = special.ellipj(u, k * k)
    assert np.allclose([sn, cn, dn], ref[:3], atol=1e-12)


@pytest.mark.parametrize("u,k", [(0.3, 0.2), (2.5, 0.9), (-7.1, 0.6), (1.1, 0.999999)])
def test_jacobi_vs_mpmath(u, k):
    sn, cn, dn = jacobi_sn_cn_dn(u, k)
    m = k * k
    assert abs(sn - float(mpmath.ellipfun("sn", u, m=m))) < 1e-13
    assert abs(cn - float(mpmath.ellipfun("cn", u, m=m))) < 1e-13
    assert abs(dn - float(mpmath.ellipfun("dn", u, m=m))) < 1e-13


@given(args, moduli)
def test_jacobi_identities(u, k):
    sn, cn, dn = jacobi_sn_cn_dn(u, k)
    assert abs(sn * sn + cn * cn - 1) < 1e-14
    assert abs(dn * dn + k * k * sn * sn - 1) < 1e-14


@given(st.floats(-3, 3), st.floats(0.05, 0.99))
def test_sd_period_and_oddness(u, k):
    K = complete_first_kind(k)
    assert abs(jacobi_sd(u + 4 * K, k) - jacobi_sd(u, k)) < 1e-11
    assert abs(jacobi_sd(-u, k) + jacobi_sd(u, k)) < 1e-14
    assert abs(jacobi_sd(u + 2 * K, k) + jacobi_sd(u, k)) < 1e-11


@given(st.floats(-3, 3), st.floats(0.05, 0.99))
def test_sd_derivative_vs_central_difference(u, k):
    h = 1e-5
    fd = (jacobi_sd(u + h, k) - jacobi_sd(u - h, k)) / (2 * h)
    assert abs(jacobi_sd_derivative(u, k) - fd) < 1e-8


def test_vectorized_arguments():
    u = np.linspace(-5, 5, 11)
    sn, _, _ = jacobi_sn_cn_dn(u, 0.5)
    assert sn.shape == u.shape
    assert np.allclose(sn, special.ellipj(u, 0.25)[0], atol=1e-13)


@given(st.floats(0.0, 1.5), moduli)
def test_incomplete_integral_vs_scipy(phi, k):
    assert np.isclose(incomplete_first_kind_phi(phi, k), special.ellipkinc(phi, k * k),
                      rtol=1e-12, atol=1e-15)


def test_carlson_rf_special_value():
    # R_F(0, 1, 2) = Gamma(1/4)^2 / (4 sqrt(2 pi))
    expect = math.gamma(0.25) ** 2 / (4 * math.sqrt(2 * math.pi))
    assert abs(carlson_rf(0.0, 1.0, 2.0) - expect) < 1e-14
    with pytest.raises(ValueError):
        carlson_rf(0.0, 0.0, 1.0)


@given(st.floats(-0.99, 0.99), st.floats(0.05, 0.95))
def test_inverse_sd_roundtrip(frac, k):
    kc = math.sqrt(1 - k * k)
    y = frac / kc  # sd ranges over [-1/k', 1/k']
    u = inverse_sd(y, k)
    assert abs(u) <= complete_first_kind(k) + 1e-12
    assert abs(jacobi_sd(u, k) - y) < 1e-11


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(0.0, 1.0))
def test_lawden_integral_vs_quadrature(a, b, frac):
    x = frac * b
    f = lambda t: 1.0 / (math.sqrt(b * b - t * t) * math.sqrt(a * a + t * t))
    ref, _ = integrate.quad(f, 0.0, x, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert abs(incomplete_first_kind(x, a, b) - ref) < 1e-9


def test_incomplete_integral_domain():
    with pytest.raises(ValueError):
        incomplete_first_kind(2.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        incomplete_first_kind(0.5, 0.0, 1.0)
