import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from moebius_curves.lorentz import (
    LightRay,
    LorentzVector,
    MoebiusElement,
    NonGenericSpectrum,
    act,
    basis,
    block_form,
    char_poly,
    even_cubic_roots,
    inner,
    is_light_like,
    is_moebius,
    metric,
    moebius_inverse,
    normalize,
    random_lie_algebra,
    random_moebius,
    spectral_split,
)
from moebius_curves.models import dirac_weyl

seeds = st.integers(0, 10_000)
dims = st.integers(2, 6)


def test_metric_signature():
    for n in (2, 3, 5):
        ev = np.linalg.eigvalsh(metric(n))
        assert np.sum(ev < 0) == 1 and np.sum(ev > 0) == n + 1


def test_basis_vectors_null_at_ends():
    n = 3
    assert inner(basis(n, 0), basis(n, 0)) == 0
    assert inner(basis(n, 0), basis(n, n + 1)) == -1
    assert inner(basis(n, 1), basis(n, 1)) == 1


def test_inner_dimension_mismatch():
    with pytest.raises(ValueError):
        inner(np.zeros(4), np.zeros(5))


def test_light_ray_normalization():
    v = 3.0 * dirac_weyl(np.array([0.2, -0.4]))
    r = LightRay.from_array(v)
    assert np.isclose(r.array[0] + r.array[-1], 1.0)
    assert is_light_like(r.array)
    with pytest.raises(ValueError):
        LightRay.from_array(np.array([1.0, 1.0, 0.0, 1.0]))


def test_normalize_rejects_past_cone():
    with pytest.raises(ValueError):
        normalize(-dirac_weyl(np.array([1.0, 0.0])))


@given(seeds, dims)
def test_random_moebius_in_group(seed, n):
    G = random_moebius(seed, n)
    assert is_moebius(G.matrix, 1e-9)
    Gi = moebius_inverse(G.matrix)
    assert np.allclose(Gi @ G.matrix, np.eye(n + 2), atol=1e-9)


def test_is_moebius_rejects_reflection_and_time_reversal():
    n = 3
    R = np.eye(n + 2)
    R[1, 1] = -1
    assert not is_moebius(R)
    assert not is_moebius(-np.eye(n + 2))


def test_moebius_element_composition():
    a, b = random_moebius(1, 3), random_moebius(2, 3)
    ab = a @ b
    assert isinstance(ab, MoebiusElement)
    assert np.allclose((ab @ ab.inverse()).matrix, np.eye(5), atol=1e-9)


@given(seeds)
def test_act_preserves_light_cone(seed):
    rng = np.random.default_rng(seed)
    p = dirac_weyl(rng.normal(size=3))
    q = act(random_moebius(seed, 3), p)
    assert is_light_like(q.array, 1e-9)


@given(seeds)
def test_lie_algebra_elements_are_infinitesimal_isometries(seed):
    X = random_lie_algebra(np.random.default_rng(seed), 4)
    S = metric(4)
    assert np.allclose(X.T @ S + S @ X, 0.0, atol=1e-12)


@given(seeds)
def test_char_poly_matches_eigenvalue_oracle(seed):
    M = np.random.default_rng(seed).normal(size=(6, 6))
    assert np.allclose(char_poly(M), np.poly(M), atol=1e-9)


def _bisect_roots(a, b, c):
    f = lambda u: ((u + a) * u + b) * u + c
    crit = np.sort(np.roots([3, 2 * a, b]).real)
    lo, hi = -1e3, 1e3
    brackets = [(lo, crit[0]), (crit[0], crit[1]), (crit[1], hi)]
    out = []
    for x0, x1 in brackets:
        for _ in range(200):
            xm = 0.5 * (x0 + x1)
            if np.sign(f(xm)) == np.sign(f(x0)):
                x0 = xm
            else:
                x1 = xm
        out.append(0.5 * (x0 + x1))
    return np.sort(out)[::-1]


@given(st.floats(0.1, 3), st.floats(-3, -0.1), st.floats(0.1, 3))
def test_even_cubic_roots_vs_bisection(r1, r2, gap):
    roots = np.array([r1, r2, r2 - gap])
    p = np.poly(roots)
    coeffs = [1.0, 0.0, p[1], 0.0, p[2], 0.0, p[3]]
    got = even_cubic_roots(coeffs)
    assert np.allclose(got, _bisect_roots(p[1], p[2], p[3]), atol=1e-9)


def test_even_cubic_roots_repeated():
    p = np.poly([1.0, -2.0, -2.0])
    with pytest.raises(NonGenericSpectrum):
        even_cubic_roots([1, 0, p[1], 0, p[2], 0, p[3]])


@given(seeds)
def test_spectral_split_roundtrip(seed):
    lam, t1, t2 = 0.9, 0.6, 1.7
    G = random_moebius(seed, 4, scale=0.4).matrix
    omega = G @ block_form(lam, t1, t2) @ moebius_inverse(G)
    sp = spectral_split(omega)
    assert np.allclose([sp.lam, sp.tau1, sp.tau2], [lam, t1, t2], atol=1e-8)
    A = sp.diagonalizer
    assert np.allclose(A @ omega @ np.linalg.inv(A), sp.block, atol=1e-8)
    S = metric(4)
    assert np.allclose(A.T @ S @ A, S, atol=1e-8)
    wp, wm = (v.components for v in sp.eigenvectors_pm)
    assert np.isclose(wp[0] + wp[-1], 1.0)
    assert np.isclose(inner(wp, wm), -1.0)
    assert np.allclose(omega @ wp, lam * wp, atol=1e-8)


def test_spectral_split_rejects_non_algebra():
    with pytest.raises(ValueError):
        spectral_split(np.eye(6))


def test_lorentz_vector_dimension():
    v = LorentzVector.from_array(np.arange(5.0))
    assert v.dim_n == 3
