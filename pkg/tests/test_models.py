import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from moebius_curves import jets as J
from moebius_curves.lorentz import inner, is_light_like, is_moebius
from moebius_curves.models import (
    Curve,
    SampledCurve,
    chart_swap,
    derivatives_from_samples,
    dirac_weyl,
    euclidean_embed,
    fd_weights,
    homogeneous_to_euclidean,
    homogeneous_to_sphere,
    inverse_stereographic,
    read_csv,
    sphere_to_homogeneous,
    stereographic,
    write_csv,
)
from moebius_curves.verification import helix_curve

points = arrays(float, 3, elements=st.floats(-5, 5))


@given(points)
def test_stereographic_roundtrip(x):
    p = inverse_stereographic(x)
    assert np.isclose(np.sum(p * p), 1.0)
    assert np.allclose(stereographic(p), x, atol=1e-9 * (1 + np.sum(x * x)))


@given(points)
def test_sphere_and_euclidean_lifts_agree(x):
    v = dirac_weyl(x)
    assert is_light_like(v, 1e-9)
    w = sphere_to_homogeneous(inverse_stereographic(x))
    # the two lifts are the same ray
    assert np.allclose(w / w[0], v, atol=1e-8 * (1 + x @ x))
    assert np.allclose(homogeneous_to_euclidean(w), x, atol=1e-8 * (1 + x @ x))
    assert np.allclose(homogeneous_to_sphere(w), inverse_stereographic(x), atol=1e-12)


def test_pole_is_rejected():
    with pytest.raises(ValueError):
        stereographic(np.array([1.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        homogeneous_to_euclidean(np.array([0.0, 0.0, 0.0, 1.0]))


@given(points, st.floats(-np.pi, np.pi))
def test_euclidean_embed_is_rigid_motion(x, th):
    A = np.eye(3)
    A[:2, :2] = [[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]]
    G = euclidean_embed(x, A)
    assert is_moebius(G.matrix, 1e-9)
    y = np.array([0.3, -1.0, 2.0])
    img = G.matrix @ dirac_weyl(y)
    assert np.allclose(homogeneous_to_euclidean(img), A @ y + x)


def test_euclidean_embed_rejects_reflection():
    with pytest.raises(ValueError):
        euclidean_embed(np.zeros(2), np.diag([1.0, -1.0]))


def test_chart_swap_is_in_group():
    P = chart_swap(3)
    assert is_moebius(P)
    assert np.allclose(P @ P, np.eye(5))


def test_fd_weights_central_second_derivative():
    w = fd_weights(np.array([-1.0, 0.0, 1.0]), 2)
    assert np.allclose(w, [1, -2, 1])


@given(st.integers(1, 4), st.floats(0.01, 0.2))
def test_fd_weights_exact_on_polynomials(m, h):
    offs = h * np.arange(-3, 4)
    w = fd_weights(offs, m)
    for deg in range(7):
        exact = 1.0 if deg == m else 0.0
        exact *= np.prod(np.arange(1, m + 1)) if deg == m else 1
        assert np.isclose(w @ offs ** deg, exact, atol=1e-6 / h ** m)


def test_sampled_derivatives_of_helix():
    c = helix_curve(1.0, 0.5, domain=(0.0, 6.0))
    ts = np.linspace(0.0, 6.0, 301)
    sc = SampledCurve(ts, c.evaluate(ts))
    fd = derivatives_from_samples(sc, 4, accuracy=8)
    tt = ts[20:-20]
    for m in range(5):
        err = np.max(np.abs(fd.derivative(tt, m) - c.derivative(tt, m)))
        assert err < 1e-5 * 10 ** m


def test_sampled_closed_curve_wraps():
    ts = np.linspace(0, 2 * np.pi, 129)
    pts = np.column_stack([np.cos(ts), np.sin(ts)])
    sc = SampledCurve(ts, pts, closed=True)
    fd = derivatives_from_samples(sc, 3, accuracy=6)
    d1 = fd.derivative(ts[:3], 1)
    assert np.allclose(d1, np.column_stack([-np.sin(ts[:3]), np.cos(ts[:3])]), atol=1e-7)


def test_sampled_curve_validation():
    with pytest.raises(ValueError):
        SampledCurve(np.arange(5.0), np.zeros((5, 2)))
    with pytest.raises(ValueError):
        SampledCurve(np.r_[0, 2, 1, 3, 4, 5, 6, 7, 8.0], np.zeros((9, 2)))
    ts = np.r_[np.linspace(0, 1, 9), 5.0]
    with pytest.raises(ValueError):
        derivatives_from_samples(SampledCurve(ts, np.zeros((10, 2))), 2)


def test_csv_roundtrip_and_inference(tmp_path):
    ts = np.linspace(0, 1, 11)
    cols = [ts, ts ** 2, np.sin(ts), ts * 0 + 1.0, ts ** 2]
    p = tmp_path / "c.csv"
    write_csv(p, ["t", "v0", "v1", "v2", "v3"], cols)
    sc = read_csv(p)
    assert sc.ambient == "moebius"
    assert np.array_equal(sc.points, np.column_stack(cols[1:]))
    assert not sc.closed
    q = tmp_path / "d.csv"
    write_csv(q, ["s", "x1", "x2"], [ts, np.cos(2 * np.pi * ts), np.sin(2 * np.pi * ts)])
    sd = read_csv(q)
    assert sd.ambient == "euclidean" and sd.closed


def test_csv_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,x1,q2\n" + "\n".join("0,0,0" for _ in range(10)))
    with pytest.raises(ValueError):
        read_csv(p)


def test_curve_moved_stays_on_cone():
    c = helix_curve(1.0, 0.5)
    G = euclidean_embed(np.array([1.0, 2.0, 3.0]))
    m = c.moved(G.matrix)
    v = m.evaluate(np.linspace(0, 1, 5))
    assert all(abs(inner(x, x)) < 1e-12 for x in v)
    assert np.allclose(m.to_euclidean().evaluate([0.2]), c.evaluate([0.2]) + [1, 2, 3])


def test_padded_curve_keeps_invariant_coordinates():
    c = helix_curve(1.0, 0.5)
    p = c.padded(5)
    assert p.n == 5 and p.ambient == "moebius"
    v = p.evaluate([0.3])[0]
    assert np.allclose(v[4:6], 0.0)
    assert np.allclose(homogeneous_to_euclidean(v)[:3], c.evaluate([0.3])[0])


def test_curve_domain_validation():
    with pytest.raises(ValueError):
        Curve.from_jet_function(lambda t: J.stack([t, t], axis=-1), (1.0, 0.0))
