"""Minkowski linear algebra on R^{n+2} and the Möbius group.

Coordinates are indexed ``0 .. n+1``.  The quadratic form is

    <u, v> = sum_A u^A v^A - u^0 v^{n+1} - u^{n+1} v^0

with Gram matrix :func:`metric`.  The Möbius group is the identity component
of the matrices ``G`` with ``G^T S G = S``; its Lie algebra consists of the
matrices ``X = S @ Omega`` with ``Omega`` antisymmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

__all__ = [
    "metric",
    "basis",
    "LorentzVector",
    "LightRay",
    "MoebiusElement",
    "SpectralSplit",
    "NonGenericSpectrum",
    "inner",
    "normalize",
    "is_light_like",
    "is_moebius",
    "moebius_inverse",
    "act",
    "random_moebius",
    "random_lie_algebra",
    "char_poly",
    "even_cubic_roots",
    "spectral_split",
    "block_form",
]


def metric(n: int) -> np.ndarray:
    """Gram matrix S of the Lorentzian form on R^{n+2}."""
    S = np.eye(n + 2)
    S[0, 0] = S[-1, -1] = 0.0
    S[0, -1] = S[-1, 0] = -1.0
    return S


def basis(n: int, a: int) -> np.ndarray:
    e = np.zeros(n + 2)
    e[a] = 1.0
    return e


@dataclass(frozen=True)
class LorentzVector:
    dim_n: int
    components: np.ndarray

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float)
        if comp.shape != (self.dim_n + 2,):
            raise ValueError(f"expected {self.dim_n + 2} components, got shape {comp.shape}")
        object.__setattr__(self, "components", comp)

    @classmethod
    def from_array(cls, v) -> "LorentzVector":
        v = np.asarray(v, dtype=float)
        return cls(v.shape[0] - 2, v)


@dataclass(frozen=True)
class LightRay:
    """A point of the conformal sphere, stored with v^0 + v^{n+1} = 1."""

    representative: LorentzVector

    @classmethod
    def from_array(cls, v, tol: float = 1e-8) -> "LightRay":
        v = np.asarray(v, dtype=float)
        if not is_light_like(v, tol):
            raise ValueError("vector is not light-like")
        return cls(LorentzVector.from_array(normalize(v)))

    @property
    def array(self) -> np.ndarray:
        return self.representative.components


@dataclass(frozen=True)
class MoebiusElement:
    dim_n: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.dim_n + 2, self.dim_n + 2):
            raise ValueError("matrix size does not match dim_n + 2")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_matrix(cls, G, tol: float = 1e-8) -> "MoebiusElement":
        G = np.asarray(G, dtype=float)
        if not is_moebius(G, tol):
            raise ValueError("matrix is not in the Möbius group")
        return cls(G.shape[0] - 2, G)

    def inverse(self) -> "MoebiusElement":
        return MoebiusElement(self.dim_n, moebius_inverse(self.matrix))

    def __matmul__(self, other):
        if isinstance(other, MoebiusElement):
            return MoebiusElement(self.dim_n, self.matrix @ other.matrix)
        return self.matrix @ np.asarray(other)


def _arr(v) -> np.ndarray:
    if isinstance(v, LorentzVector):
        return v.components
    if isinstance(v, LightRay):
        return v.array
    if isinstance(v, MoebiusElement):
        return v.matrix
    return np.asarray(v, dtype=float)


def inner(u, v) -> np.ndarray:
    """Lorentzian product over the last axis; broadcasts over leading axes."""
    u, v = _arr(u), _arr(v)
    if u.shape[-1] != v.shape[-1]:
        raise ValueError(f"dimension mismatch: {u.shape[-1]} vs {v.shape[-1]}")
    return (
        np.sum(u[..., 1:-1] * v[..., 1:-1], axis=-1)
        - u[..., 0] * v[..., -1]
        - u[..., -1] * v[..., 0]
    )


def normalize(v) -> np.ndarray:
    """Scale onto the affine slice v^0 + v^{n+1} = 1 of the positive cone."""
    v = _arr(v)
    w = v[..., 0] + v[..., -1]
    if np.any(w <= 0):
        raise ValueError("vector is not in the positive light cone")
    return v / w[..., None]


def is_light_like(v, tol: float = 1e-9) -> bool:
    v = _arr(v)
    return bool(np.all(np.abs(inner(v, v)) <= tol * np.sum(v * v, axis=-1)))


def is_moebius(G, tol: float = 1e-9) -> bool:
    G = _arr(G)
    if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] < 4:
        return False
    S = metric(G.shape[0] - 2)
    if np.max(np.abs(G.T @ S @ G - S)) > tol:
        return False
    if np.linalg.det(G) <= 0:
        return False
    return bool(G[0, 0] + G[-1, 0] > 0)


def moebius_inverse(G) -> np.ndarray:
    """Inverse of a metric-preserving matrix: S G^T S (batched)."""
    G = _arr(G)
    S = metric(G.shape[-1] - 2)
    return S @ np.swapaxes(G, -1, -2) @ S


def act(G, p) -> LightRay:
    """Image of the point ``p`` under ``G``, renormalized."""
    v = _arr(G) @ _arr(p)
    if v[0] + v[-1] <= 0:
        raise ValueError("image left the positive light cone (non-orthochronous matrix?)")
    return LightRay(LorentzVector.from_array(v / (v[0] + v[-1])))


def random_lie_algebra(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    Om = rng.normal(scale=scale, size=(n + 2, n + 2))
    Om = 0.5 * (Om - Om.T)
    return metric(n) @ Om


def _reproject(G: np.ndarray, iters: int = 6) -> np.ndarray:
    # Newton-Schulz iteration towards G^T S G = S
    S = metric(G.shape[0] - 2)
    eye = np.eye(G.shape[0])
    for _ in range(iters):
        E = S @ G.T @ S @ G
        if np.max(np.abs(E - eye)) < 1e-15:
            break
        G = G @ (3 * eye - E) / 2
    return G


def random_moebius(seed: int, n: int, scale: float = 0.5, factors: int = 3) -> MoebiusElement:
    """Deterministic pseudo-random Möbius element.

    Built as a product of ``factors`` exponentials of random Lie algebra
    elements with entries of size ``scale``, then re-projected onto the group.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed)
    G = np.eye(n + 2)
    for _ in range(factors):
        G = G @ expm(random_lie_algebra(rng, n, scale))
    G = _reproject(G)
    return MoebiusElement(n, G)


# ---------------------------------------------------------------------------
# spectral machinery for 6x6 Lie algebra elements


def char_poly(M) -> np.ndarray:
    """Coefficients of det(tI - M), highest degree first (Faddeev-LeVerrier)."""
    M = _arr(M)
    d = M.shape[0]
    coeffs = np.zeros(d + 1)
    coeffs[0] = 1.0
    Mk = np.zeros_like(M)
    eye = np.eye(d)
    for k in range(1, d + 1):
        Mk = M @ (Mk + coeffs[k - 1] * eye)
        coeffs[k] = -np.trace(Mk) / k
    return coeffs


def _cubic_real_roots(a: float, b: float, c: float) -> np.ndarray:
    """Real roots of u^3 + a u^2 + b u + c when all three are real, descending."""
    p = b - a * a / 3.0
    q = 2 * a ** 3 / 27.0 - a * b / 3.0 + c
    if p >= 0:
        raise NonGenericSpectrum("cubic does not have three distinct real roots")
    m = 2.0 * np.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * m)
    if abs(arg) > 1.0:
        raise NonGenericSpectrum("cubic does not have three distinct real roots")
    theta = np.arccos(arg) / 3.0
    roots = m * np.cos(theta - 2 * np.pi * np.arange(3) / 3.0) - a / 3.0
    # one Newton polish per root
    for i in range(3):
        u = roots[i]
        f = ((u + a) * u + b) * u + c
        df = (3 * u + 2 * a) * u + b
        if df != 0:
            roots[i] = u - f / df
    return np.sort(roots)[::-1]


def even_cubic_roots(coeffs, rel_tol: float = 1e-10) -> np.ndarray:
    """Roots u = t^2 of an even sextic t^6 + a t^4 + b t^2 + c, descending.

    Raises :class:`NonGenericSpectrum` if two roots coincide within
    ``rel_tol`` times the coefficient scale.
    """
    c6 = np.asarray(coeffs, dtype=float)
    a, b, c = c6[2], c6[4], c6[6]
    roots = _cubic_real_roots(a, b, c)
    scale = 1.0 + abs(a) + abs(b) + abs(c)
    if np.min(np.abs(np.diff(roots))) <= rel_tol * scale:
        raise NonGenericSpectrum("repeated eigenvalues")
    return roots


class NonGenericSpectrum(ValueError):
    """Raised when a matrix does not have the (lambda, i tau1, i tau2) spectrum."""


def block_form(lam: float, tau1: float, tau2: float) -> np.ndarray:
    D = np.zeros((6, 6))
    D[0, 0] = lam
    D[5, 5] = -lam
    D[2, 1], D[1, 2] = tau1, -tau1
    D[4, 3], D[3, 4] = tau2, -tau2
    return D


@dataclass(frozen=True)
class SpectralSplit:
    """Spectral data of a generic element of the Lie algebra of Möb(4).

    ``diagonalizer`` is a matrix A with ``A @ omega @ inv(A) == block_form``.
    ``proper`` is False when A preserves the metric but has determinant -1;
    in that case the conjugation is by an element of the full Lorentz group.
    """

    lam: float
    tau1: float
    tau2: float
    diagonalizer: np.ndarray
    eigenvectors_pm: tuple
    proper: bool = True
    roots: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def block(self) -> np.ndarray:
        return block_form(self.lam, self.tau1, self.tau2)


def _null_space(M: np.ndarray, dim: int) -> np.ndarray:
    _, _, vt = np.linalg.svd(M)
    return vt[-dim:].T


def _sign_fix(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return v if v[i] >= 0 else -v


def spectral_split(omega, rel_tol: float = 1e-10) -> SpectralSplit:
    """Conjugate ``omega`` (6x6, in the Lie algebra of Möb(4)) to block form."""
    omega = _arr(omega)
    if omega.shape != (6, 6):
        raise ValueError("spectral_split expects a 6x6 matrix")
    S = metric(4)
    scale = max(1.0, np.max(np.abs(omega)))
    if np.max(np.abs(omega.T @ S + S @ omega)) > 1e-8 * scale:
        raise ValueError("matrix is not in the Lie algebra of the Möbius group")
    roots = even_cubic_roots(char_poly(omega), rel_tol)
    t_plus, t1, t2 = roots
    if not (t_plus > 0 > t1 > t2):
        raise NonGenericSpectrum(f"wrong spectrum signature, roots {roots}")
    lam, tau1, tau2 = np.sqrt(t_plus), np.sqrt(-t1), np.sqrt(-t2)
    eye = np.eye(6)

    wp = _null_space(omega - lam * eye, 1)[:, 0]
    wm = _null_space(omega + lam * eye, 1)[:, 0]
    if wp[0] + wp[-1] < 0:
        wp = -wp
    if wm[0] + wm[-1] < 0:
        wm = -wm
    wp = wp / (wp[0] + wp[-1])
    wm = wm / (-inner(wp, wm))

    cols = [wp]
    for tau in (tau1, tau2):
        plane = _null_space(omega @ omega + tau * tau * eye, 2)
        f1 = _sign_fix(plane[:, 0])
        f1 = f1 - inner(f1, wm) * (-wp) - inner(f1, wp) * (-wm)
        f1 = f1 / np.sqrt(inner(f1, f1))
        cols += [f1, omega @ f1 / tau]
    cols.append(wm)
    Ainv = np.column_stack(cols)
    gram = Ainv.T @ S @ Ainv
    if np.max(np.abs(gram - S)) > 1e-6:
        raise NonGenericSpectrum("failed to build a metric-preserving diagonalizer")
    A = S @ Ainv.T @ S
    return SpectralSplit(
        lam=float(lam),
        tau1=float(tau1),
        tau2=float(tau2),
        diagonalizer=A,
        eigenvectors_pm=(LorentzVector(4, wp), LorentzVector(4, wm)),
        proper=bool(np.linalg.det(A) > 0),
        roots=roots,
    )
