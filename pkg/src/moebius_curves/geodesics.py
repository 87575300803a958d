"""Conformal geodesics: Euler-Lagrange checks, closed-form curvatures, Lax pair
and the explicit light-like curves in Q_4.

Throughout, ``w = mu_2^2`` and ``P(t) = -t^3 + 2 C1 t^2 + C3 t - C2^2``; the
energy identity is equivalent to ``w'^2 = 4 P(w)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad, solve_ivp
from scipy.linalg import subspace_angles

from . import jets as J
from .conformal import (
    ConformalFrenetData,
    frenet_matrix,
    mu_s_derivatives,
    reconstruct_from_invariants,
)
from .elliptic import complete_first_kind, jacobi_sn_cn_dn
from .jets import Jet
from .lorentz import (
    NonGenericSpectrum,
    SpectralSplit,
    char_poly,
    even_cubic_roots,
    inner,
    spectral_split,
)
from .models import Curve

log = logging.getLogger(__name__)

__all__ = [
    "InadmissibleTriple",
    "AdmissibleTriple",
    "CurvatureSolution",
    "GeodesicCurve",
    "LaxData",
    "triple_from_roots",
    "classify_triple",
    "random_admissible_triple",
    "solve_curvatures",
    "lax_matrix",
    "lax_data",
    "phase_rates",
    "lax_residual",
    "conserved_omega",
    "spectral_values",
    "build_geodesic",
    "el_residual",
    "verify_codimension_reduction",
    "degenerate_q3_curvatures",
    "integrate_q4_curvatures",
]


class InadmissibleTriple(ValueError):
    """Constants that do not give a non-constant closed-form geodesic."""

    def __init__(self, msg, case=None):
        super().__init__(msg)
        self.case = case


def _scale(C1, C2, C3) -> float:
    return 1.0 + abs(C1) + abs(C2) + abs(C3)


def _P(t, C1, C2, C3):
    return -t ** 3 + 2 * C1 * t ** 2 + C3 * t - C2 ** 2


@dataclass(frozen=True)
class AdmissibleTriple:
    C1: float
    C2: float
    C3: float
    roots: tuple  # (xi_minus, xi1, xi2)

    @property
    def scale(self) -> float:
        return _scale(self.C1, self.C2, self.C3)

    def P(self, t):
        return _P(t, self.C1, self.C2, self.C3)

    def dP(self, t):
        return -3 * t ** 2 + 4 * self.C1 * t + self.C3


def triple_from_roots(xi_minus: float, xi1: float, xi2: float) -> AdmissibleTriple:
    """Constants whose cubic P has the prescribed roots (Vieta)."""
    if not (xi_minus < 0 < xi1 < xi2):
        raise InadmissibleTriple("roots must satisfy xi_minus < 0 < xi1 < xi2")
    C1 = 0.5 * (xi_minus + xi1 + xi2)
    C3 = -(xi_minus * xi1 + xi_minus * xi2 + xi1 * xi2)
    C2 = float(np.sqrt(-xi_minus * xi1 * xi2))
    return AdmissibleTriple(C1, C2, C3, (float(xi_minus), float(xi1), float(xi2)))


def classify_triple(C1: float, C2: float, C3: float, rel_tol: float = 1e-10):
    """Case tag ('i'..'iv') and roots of P for the constants (C1, C2, C3).

    Roots are returned as a numpy array: real and ascending for cases
    ii-iv, and (real, complex, complex) for case i.
    """
    if C2 == 0:
        raise InadmissibleTriple("C2 = 0: use the degenerate branch (Q3 system)", case=None)
    scale = _scale(C1, C2, C3)
    # t^3 - 2 C1 t^2 - C3 t + C2^2 = 0
    a, b, c = -2.0 * C1, -C3, C2 * C2
    p = b - a * a / 3
    q = 2 * a ** 3 / 27 - a * b / 3 + c
    disc = -(4 * p ** 3 + 27 * q ** 2)
    if disc < -rel_tol * scale ** 3:
        r = np.roots([1.0, a, b, c])
        real = r[np.argmin(np.abs(r.imag))].real
        cplx = r[np.abs(r.imag) > 0]
        return "i", np.array([real, *cplx])
    m = 2 * np.sqrt(max(-p / 3, 0.0))
    if m == 0:
        roots = np.full(3, -a / 3)
    else:
        arg = np.clip(3 * q / (p * m), -1.0, 1.0)
        th = np.arccos(arg) / 3
        roots = np.sort(m * np.cos(th - 2 * np.pi * np.arange(3) / 3) - a / 3)
    for i in range(3):
        u = roots[i]
        df = (3 * u + 2 * a) * u + b
        if df != 0:
            roots[i] = u - (((u + a) * u + b) * u + c) / df
    roots = np.sort(roots)
    xm, x1, x2 = roots
    if x2 < 0:
        return "ii", roots
    if abs(x2 - x1) <= rel_tol * scale or disc <= rel_tol * scale ** 3:
        return "iii", roots
    return "iv", roots


def admissible(C1: float, C2: float, C3: float) -> AdmissibleTriple:
    case, roots = classify_triple(C1, C2, C3)
    if case != "iv":
        raise InadmissibleTriple(f"triple is in case ({case}); only case (iv) is admissible", case)
    return AdmissibleTriple(float(C1), float(abs(C2)), float(C3), tuple(float(r) for r in roots))


def random_admissible_triple(rng: np.random.Generator) -> AdmissibleTriple:
    xm = -rng.uniform(0.1, 3.0)
    x1 = rng.uniform(0.1, 2.0)
    x2 = x1 + rng.uniform(0.1, 2.0)
    return triple_from_roots(xm, x1, x2)


# ---------------------------------------------------------------------------
# closed-form curvatures


@dataclass(frozen=True)
class CurvatureSolution:
    """mu_2^2 = xi1 + c sd(s sqrt(xi2 - xi_minus), k)^2 and its companions.

    The sd argument is scaled by sqrt(xi2 - xi_minus); see the project notes
    for why this differs from the printed formula.
    """

    triple: AdmissibleTriple
    c: float
    k: float
    omega: float
    period: float

    # values ---------------------------------------------------------------
    def w(self, s):
        sn, cn, dn = jacobi_sn_cn_dn(self.omega * np.asarray(s, dtype=float), self.k)
        sd = sn / dn
        return self.triple.roots[1] + self.c * sd * sd

    def w_dot(self, s):
        sn, cn, dn = jacobi_sn_cn_dn(self.omega * np.asarray(s, dtype=float), self.k)
        return 2 * self.c * (sn / dn) * (cn / (dn * dn)) * self.omega

    def mu2(self, s):
        return np.sqrt(self.w(s))

    def mu2_dot(self, s):
        return self.w_dot(s) / (2 * self.mu2(s))

    def mu2_ddot(self, s):
        w = self.w(s)
        wd = self.w_dot(s)
        wdd = 2 * self.triple.dP(w)
        return wdd / (2 * np.sqrt(w)) - wd * wd / (4 * w ** 1.5)

    def mu1(self, s):
        return -1.5 * self.w(s) + self.triple.C1

    def mu3(self, s):
        return self.triple.C2 / self.w(s)

    def energy(self, s):
        m, md = self.mu2(s), self.mu2_dot(s)
        t = self.triple
        return 0.5 * md ** 2 + 0.5 * m ** 4 - t.C1 * m ** 2 + t.C2 ** 2 / (2 * m ** 2)

    def energy_residual(self, s):
        return np.abs(self.energy(s) - 0.5 * self.triple.C3)

    # jets -----------------------------------------------------------------
    def w_taylor(self, s, order: int) -> np.ndarray:
        """Taylor coefficients of w at s from w'' = 2 P'(w)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = self.triple
        c = np.zeros((order + 1, s.size))
        c[0] = self.w(s)
        if order >= 1:
            c[1] = self.w_dot(s)
        for k in range(order - 1):
            sq = sum(c[i] * c[k - i] for i in range(k + 1))
            rhs = -3 * sq + 4 * t.C1 * c[k] + (t.C3 if k == 0 else 0.0)
            c[k + 2] = 2 * rhs / ((k + 1) * (k + 2))
        return c

    def mu_taylor(self, s, order: int) -> Jet:
        """Jet (len(s), 3) of (mu1, mu2, mu3)."""
        w = Jet(self.w_taylor(s, order))
        t = self.triple
        return J.stack([-1.5 * w + t.C1, J.sqrt(w), t.C2 * J.reciprocal(w)], axis=-1)

    def invariant_callables(self):
        def make(i):
            def f(s, order):
                return self.mu_taylor(s, order).c[..., i]
            return f
        return [make(0), make(1), make(2)]


def solve_curvatures(t: AdmissibleTriple) -> CurvatureSolution:
    xm, x1, x2 = t.roots
    if not (xm < 0 < x1 < x2):
        raise InadmissibleTriple("triple is not admissible")
    c = (x2 - x1) * (x1 - xm) / (x2 - xm)
    k = float(np.sqrt((x2 - x1) / (x2 - xm)))
    omega = float(np.sqrt(x2 - xm))
    period = 2 * complete_first_kind(k) / omega
    return CurvatureSolution(t, c, k, omega, period)


# ---------------------------------------------------------------------------
# Lax pair


def lax_matrix(sol: CurvatureSolution, s) -> np.ndarray:
    """Theta(s), batched over s."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    m1, m2, m2d, m3 = sol.mu1(s), sol.mu2(s), sol.mu2_dot(s), sol.mu3(s)
    return _theta(m1, m2, m2d, m3)


def _theta(m1, m2, m2d, m3):
    m2 = np.asarray(m2, dtype=float)
    Th = np.zeros(m2.shape + (6, 6))
    Th[..., 0, 1] = 1.0
    Th[..., 0, 2] = -m1 - m2 ** 2
    Th[..., 0, 3] = m2d
    Th[..., 0, 4] = m2 * m3
    Th[..., 1, 3] = -m2
    Th[..., 1, 5] = 1.0
    Th[..., 2, 0] = 1.0
    Th[..., 2, 5] = -m1 - m2 ** 2
    Th[..., 3, 1] = m2
    Th[..., 3, 5] = m2d
    Th[..., 4, 5] = m2 * m3
    Th[..., 5, 2] = 1.0
    return Th


def _theta_jet(mu: Jet) -> Jet:
    """Theta as a jet from (mu1, mu2, mu3) jets; uses d/ds for mu2-dot."""
    m1, m2, m3 = mu[..., 0], mu[..., 1], mu[..., 2]
    m2d = m2.deriv()
    o = m2d.order
    m1, m2, m3 = m1.truncate(o), m2.truncate(o), m3.truncate(o)
    Th = Jet(np.zeros((o + 1,) + m2.shape + (6, 6)))
    Th.c[0, ..., 0, 1] = Th.c[0, ..., 1, 5] = Th.c[0, ..., 2, 0] = Th.c[0, ..., 5, 2] = 1.0
    a = -1.0 * m1 - m2 * m2
    Th.c[..., 0, 2] = a.c
    Th.c[..., 2, 5] = a.c
    Th.c[..., 0, 3] = m2d.c
    Th.c[..., 3, 5] = m2d.c
    Th.c[..., 0, 4] = (m2 * m3).c
    Th.c[..., 4, 5] = (m2 * m3).c
    Th.c[..., 1, 3] = -m2.c
    Th.c[..., 3, 1] = m2.c
    return Th


@dataclass(frozen=True)
class LaxData:
    theta0: np.ndarray
    omega: np.ndarray
    char_coeffs: np.ndarray
    drift: float


def chi_theta_coeffs(t: AdmissibleTriple) -> np.ndarray:
    """t^6 + 2 C1 t^4 - (1 + C3) t^2 - C2^2, highest degree first."""
    return np.array([1.0, 0.0, 2 * t.C1, 0.0, -(1 + t.C3), 0.0, -t.C2 ** 2])


def p_minus_identity_coeffs(t: AdmissibleTriple) -> np.ndarray:
    """Coefficients of P(-t^2) - t^2, expanded independently."""
    # P(-x) = x^3 + 2 C1 x^2 - C3 x - C2^2 with x = t^2
    out = np.zeros(7)
    out[0] = 1.0
    out[2] = 2 * t.C1
    out[4] = -t.C3 - 1.0
    out[6] = -t.C2 ** 2
    return out


def lax_residual(sol: CurvatureSolution, s) -> np.ndarray:
    """max |dTheta/ds - [Theta, phi]| per s, with dTheta from exact jets."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    mu = sol.mu_taylor(s, 3)
    Th = _theta_jet(mu)
    dTh = Th.deriv().value
    Th0 = Th.value
    phi = frenet_matrix(mu.value.T, 4)
    return np.max(np.abs(dTh - (Th0 @ phi - phi @ Th0)), axis=(-1, -2))


def conserved_omega(sol: CurvatureSolution, s_grid=None, tol: float = 1e-7,
                    frames=None) -> LaxData:
    """omega = e Theta e^{-1} along a reconstructed Frenet frame.

    ``frames`` may be a :class:`ReconstructedCurve`; otherwise the frame is
    integrated from the closed-form invariants on ``s_grid``.
    """
    if s_grid is None:
        s_grid = np.linspace(0.0, 2 * sol.period, 401)
    s_grid = np.asarray(s_grid, dtype=float)
    rc = frames if frames is not None else reconstruct_from_invariants(
        s_grid, sol.invariant_callables(), 4)
    e = rc.frame_at(s_grid)
    from .lorentz import moebius_inverse

    Th = lax_matrix(sol, s_grid)
    W = e @ Th @ moebius_inverse(e)
    e0 = rc.frame_at(np.array([0.0]))[0]
    omega = e0 @ lax_matrix(sol, 0.0)[0] @ moebius_inverse(e0)
    drift = float(np.max(np.abs(W - omega)))
    if drift > tol:
        raise ArithmeticError(f"integration drift: |e Theta e^-1 - omega| = {drift:.3e}")
    return LaxData(lax_matrix(sol, 0.0)[0], omega, char_poly(omega), drift)


def lax_data(sol: CurvatureSolution) -> LaxData:
    Th0 = lax_matrix(sol, 0.0)[0]
    return LaxData(Th0, Th0, char_poly(Th0), 0.0)


def spectral_values(t: AdmissibleTriple):
    """(lambda, tau1, tau2) and the roots (t+, t1, t2) of P(-x) - x."""
    roots = even_cubic_roots(chi_theta_coeffs(t))
    tp, t1, t2 = roots
    if not (tp > 0 > t1 > t2):
        raise NonGenericSpectrum("admissible triple gave an unexpected spectrum")
    return (float(np.sqrt(tp)), float(np.sqrt(-t1)), float(np.sqrt(-t2))), roots


def phase_rates(sol: CurvatureSolution, lam: float, taus, s) -> dict:
    """Logarithmic growth rates of the diagonalized components of e_0.

    Built from the coefficients a_0..a_5 of the decoupled scalar equations;
    returns I~(lam), J~(lam) and I(tau_i), J(tau_i) as arrays over s.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    C1, C2 = sol.triple.C1, sol.triple.C2
    m, md = sol.mu2(s), sol.mu2_dot(s)
    q = md ** 2 + 1
    num = m ** 2 + md ** 2 * m ** 2 + C2 ** 2
    a0 = md * num / (m ** 3 * q)
    a1 = num / (m ** 4 * q)
    a2 = md * (m ** 2 - 2 * C1) / (m * q)
    a3 = (m ** 2 - 2 * C1) / (m ** 2 * q)
    a4 = -md / (m * q)
    a5 = -1.0 / (m ** 2 * q)
    out = {
        "I~": a4 * lam ** 4 + a2 * lam ** 2 + a0,
        "J~": a5 * lam ** 5 + a3 * lam ** 3 + a1 * lam,
    }
    for i, t in enumerate(taus, start=1):
        out[f"I{i}"] = a4 * t ** 4 - a2 * t ** 2 + a0
        out[f"J{i}"] = a5 * t ** 5 - a3 * t ** 3 + a1 * t
    return out


# ---------------------------------------------------------------------------
# explicit geodesic


_GL_NODES, _GL_WEIGHTS = leggauss(24)


class _PhaseIntegral:
    """Integral from 0 to s of a periodic, even integrand g(w(s)).

    One period is split into panels integrated by adaptive quadrature; a
    partial panel is handled with fixed Gauss-Legendre, and whole periods are
    accumulated linearly.
    """

    def __init__(self, sol: CurvatureSolution, g, panels: int = 32, tol: float = 1e-13):
        self.sol = sol
        self.g = g
        T = sol.period
        self.T = T
        self.edges = np.linspace(0.0, T, panels + 1)
        vals = [quad(lambda x: float(g(sol.w(x))), a, b, epsabs=tol, epsrel=tol, limit=200)[0]
                for a, b in zip(self.edges[:-1], self.edges[1:])]
        self.cum = np.concatenate([[0.0], np.cumsum(vals)])
        self.full = self.cum[-1]
        self.dx = T / panels

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        k = np.floor(s / self.T)
        r = s - k * self.T
        j = np.clip(np.floor(r / self.dx).astype(int), 0, len(self.edges) - 2)
        a = self.edges[j]
        half = 0.5 * (r - a)
        x = a[..., None] + half[..., None] * (1.0 + _GL_NODES)
        part = half * np.sum(self.g(self.sol.w(x)) * _GL_WEIGHTS, axis=-1)
        return k * self.full + self.cum[j] + part


@dataclass(frozen=True)
class GeodesicCurve:
    """Closed-form conformal geodesic of Q_4 in the canonical gauge.

    The first rotation phase runs as the integral of 1/(mu2^2 - tau1^2), so
    that a positively oriented Frenet frame sees mu3 = C2 / mu2^2 > 0; the
    opposite sign gives the mirror image.

    ``e0(s)`` returns the six homogeneous coordinates; ``curve`` wraps them
    as a :class:`Curve` on ``domain`` with exact Taylor jets.
    """

    curvatures: CurvatureSolution
    lam: float
    tau1: float
    tau2: float
    spectral: SpectralSplit | None
    phases: tuple
    domain: tuple
    gauge: tuple = (1.0, 0.0, 0.0)

    @property
    def triple(self) -> AdmissibleTriple:
        return self.curvatures.triple

    def general_constants(self, A: float = 1.0, theta1: float = 0.0, theta2: float = 0.0) -> dict:
        """(p0, p5, rho1, rho2, theta1, theta2) of the general light-like solution."""
        l2, t1, t2 = self.lam ** 2, self.tau1 ** 2, self.tau2 ** 2
        alpha = np.sqrt((t2 - t1) / 2)
        return {"p0": A * alpha, "p5": alpha / A, "rho1": np.sqrt(l2 + t2),
                "rho2": np.sqrt(l2 + t1), "theta1": theta1, "theta2": theta2}

    def lightlike_constraints(self, **kw) -> tuple[float, float]:
        """Residuals of 2 p0 p5 = rho1^2 - rho2^2 and 2 p0 p5 lam^2 = rho2^2 tau2^2 - rho1^2 tau1^2."""
        g = self.general_constants(**kw)
        pp = 2 * g["p0"] * g["p5"]
        r1 = pp - (g["rho1"] ** 2 - g["rho2"] ** 2)
        r2 = pp * self.lam ** 2 - (g["rho2"] ** 2 * self.tau2 ** 2 - g["rho1"] ** 2 * self.tau1 ** 2)
        return float(r1), float(r2)

    def taylor(self, s, order: int) -> Jet:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        sol = self.curvatures
        w = Jet(sol.w_taylor(s, order))
        l2, t1s, t2s = self.lam ** 2, self.tau1 ** 2, self.tau2 ** 2
        alpha = np.sqrt((t2s - t1s) / 2)
        g0 = J.reciprocal(w + l2)
        g1 = J.reciprocal(w - t1s)
        g2 = J.reciprocal(-1.0 * w + t2s)
        ph0, ph1, ph2 = (p(s) for p in self.phases)
        if order >= 1:
            P0 = g0.truncate(order - 1).antideriv(ph0)
            P1 = g1.truncate(order - 1).antideriv(ph1)
            P2 = g2.truncate(order - 1).antideriv(ph2)
        else:
            P0, P1, P2 = Jet(ph0[None]), Jet(ph1[None]), Jet(ph2[None])
        amp0 = alpha * J.sqrt(w + l2)
        s1, c1 = J.sincos(P1 * self.tau1)
        s2, c2 = J.sincos(P2 * self.tau2)
        a1 = np.sqrt(l2 + t2s) * J.sqrt(w - t1s)
        a2 = np.sqrt(l2 + t1s) * J.sqrt(-1.0 * w + t2s)
        comps = [
            amp0 * J.exp(P0 * self.lam),
            a1 * s1,
            a1 * c1,
            a2 * s2,
            a2 * c2,
            amp0 * J.exp(P0 * (-self.lam)),
        ]
        return J.stack(comps, axis=-1)

    def e0(self, s) -> np.ndarray:
        return self.taylor(s, 0).value

    @property
    def curve(self) -> Curve:
        return Curve(lambda t, order: self.taylor(t, order), self.domain, "moebius")

    def lightlike_residual(self, s) -> np.ndarray:
        v = self.e0(s)
        return np.abs(inner(v, v)) / np.sum(v * v, axis=-1)


def build_geodesic(t: AdmissibleTriple, domain=None, with_split: bool = True) -> GeodesicCurve:
    """Explicit geodesic with gauge (A, theta1, theta2) = (1, 0, 0) and s0 = 0."""
    sol = solve_curvatures(t)
    (lam, tau1, tau2), _ = spectral_values(t)
    w_lo, w_hi = t.roots[1], t.roots[2]
    if not (tau1 ** 2 < w_lo and w_hi < tau2 ** 2):
        raise NonGenericSpectrum("mu2^2 range is not inside (tau1^2, tau2^2)")
    l2, t1s, t2s = lam ** 2, tau1 ** 2, tau2 ** 2
    phases = (
        _PhaseIntegral(sol, lambda w: 1.0 / (w + l2)),
        _PhaseIntegral(sol, lambda w: 1.0 / (w - t1s)),
        _PhaseIntegral(sol, lambda w: 1.0 / (t2s - w)),
    )
    split = None
    if with_split:
        split = spectral_split(lax_matrix(sol, 0.0)[0])
    if domain is None:
        domain = (0.0, 2 * sol.period)
    return GeodesicCurve(sol, lam, tau1, tau2, split, phases, tuple(domain))


# ---------------------------------------------------------------------------
# Euler-Lagrange residual


@dataclass(frozen=True)
class ELReport:
    first: np.ndarray
    second: np.ndarray
    max_first: float
    max_second: float
    rms: float

    @property
    def max(self) -> float:
        return max(self.max_first, self.max_second)


def el_residual(d: ConformalFrenetData, mask=None) -> ELReport:
    """Residuals of the Euler-Lagrange system along reduced Frenet data.

    First equation: d mu1/ds + 3/2 d|X|^2/ds.  Second: the components of
    nabla^2 X / ds^2 - X (|X|^2 + 2 mu1) in the Frenet frame.
    """
    n = d.n
    D = mu_s_derivatives(d, min(2, d.mu_jets.order))
    if mask is None:
        mask = d.genericity_order >= 1
    if n == 2:
        first = D[1, 0]
        second = np.zeros_like(first)
    else:
        if D.shape[0] < 3:
            raise ValueError("el_residual needs two s-derivatives of the invariants")
        m1, m2 = D[0, 0], D[0, 1]
        m1d, m2d, m2dd = D[1, 0], D[1, 1], D[2, 1]
        first = m1d + 3 * m2 * m2d
        comps = [m2dd - m2 * (m2 ** 2 + 2 * m1)]
        if n >= 4:
            m3, m3d = D[0, 2], D[1, 2]
            comps[0] = comps[0] - m2 * m3 ** 2
            comps.append(2 * m2d * m3 + m2 * m3d)
        if n >= 5:
            comps.append(m2 * D[0, 2] * D[0, 3])
        second = np.sqrt(np.sum(np.square(comps), axis=0))
    first = np.where(mask, np.abs(first), np.nan)
    second = np.where(mask, second, np.nan)
    both = np.concatenate([first[mask], second[mask]])
    return ELReport(first, second, float(np.nanmax(first)), float(np.nanmax(second)),
                    float(np.sqrt(np.mean(both ** 2))) if both.size else float("nan"))


# ---------------------------------------------------------------------------
# codimension reduction


@dataclass(frozen=True)
class CodimensionReport:
    rank: np.ndarray
    singular_values: np.ndarray
    stacked_singular_values: np.ndarray
    span_drift: float
    linear_residual: float
    C1: float


def _E_jets(d: ConformalFrenetData) -> Jet:
    """E = (e0 | e1 | e2 | X | nabla X / ds | e_{n+1}) as t-jets."""
    n = d.n
    e = d.frame_jet
    rinv = J.reciprocal(d.rho_jet.truncate(d.mu_jets.order))
    mu = d.mu_jets
    m2 = mu[..., 1]
    m2d = m2.deriv() * rinv.truncate(m2.order - 1)
    o = m2d.order
    e3 = e[..., 3].truncate(o)
    X = e3 * m2.truncate(o).expand(-1)
    nX = e3 * m2d.expand(-1)
    if n >= 4:
        e4 = e[..., 4].truncate(o)
        nX = nX + e4 * (m2 * mu[..., 2]).truncate(o).expand(-1)
    cols = [e[..., 0], e[..., 1], e[..., 2], X, nX, e[..., n + 1]]
    return J.stack([c.truncate(o) for c in cols], axis=-1)


def verify_codimension_reduction(d: ConformalFrenetData) -> CodimensionReport:
    """Rank, span drift and linear-system residual of E(s) for a geodesic in Q_n."""
    n = d.n
    if n < 4:
        raise ValueError("codimension check needs n >= 4")
    E = _E_jets(d)
    vals = E.value
    sv = np.linalg.svd(vals, compute_uv=False)
    rank = np.sum(sv > 1e-8 * sv[:, :1], axis=-1)
    # the spans agree iff the stacked matrix keeps rank <= 6
    stacked = np.concatenate(list(vals), axis=-1)
    ssv = np.linalg.svd(stacked, compute_uv=False)
    base = vals[0]
    drift = max(float(np.max(subspace_angles(base, v))) for v in vals)
    mus = d.mu_jets.value
    C1 = float(np.mean(mus[:, 1] ** 2 + 2.0 / 3.0 * mus[:, 0]))
    D = mu_s_derivatives(d, 1)
    m1, m1d = D[0, 0], D[1, 0]
    A = np.zeros(m1.shape + (6, 6))
    A[..., 0, 1] = m1
    A[..., 0, 2] = 1.0
    A[..., 1, 0] = 1.0
    A[..., 1, 5] = m1
    A[..., 2, 3] = 2.0 / 3.0 * m1 - C1
    A[..., 2, 4] = m1d / 3.0
    A[..., 2, 5] = 1.0
    A[..., 3, 2] = 1.0
    A[..., 3, 4] = 4.0 / 3.0 * m1 + C1
    A[..., 4, 3] = 1.0
    A[..., 5, 1] = 1.0
    Edot = E.deriv().value / d.rho_jet.value[:, None, None]
    res = float(np.max(np.abs(Edot - vals @ A)))
    return CodimensionReport(rank, sv, ssv, drift, res, C1)


# ---------------------------------------------------------------------------
# numerical branches


@dataclass(frozen=True)
class ODESolution:
    s: np.ndarray
    mu2: np.ndarray
    mu2_dot: np.ndarray
    energy: np.ndarray
    energy_drift: float
    truncated: bool


def integrate_q4_curvatures(C1: float, C2: float, mu2_0: float, mu2dot_0: float,
                            s_max: float = 10.0, num: int = 1001,
                            rtol: float = 1e-12, atol: float = 1e-12) -> ODESolution:
    """Integrate mu2'' = -2 mu2^3 + 2 C1 mu2 + C2^2 / mu2^3 (C2 = 0 gives the Q3 system)."""
    if mu2_0 <= 0:
        raise ValueError("mu2(0) must be positive")

    def rhs(s, y):
        m, md = y
        return [md, -2 * m ** 3 + 2 * C1 * m + C2 ** 2 / m ** 3]

    def hit_zero(s, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    s_eval = np.linspace(0.0, s_max, num)
    sol = solve_ivp(rhs, (0.0, s_max), [mu2_0, mu2dot_0], method="DOP853",
                    t_eval=s_eval, events=hit_zero, rtol=rtol, atol=atol)
    m, md = sol.y
    en = 0.5 * md ** 2 + 0.5 * m ** 4 - C1 * m ** 2 + C2 ** 2 / (2 * m ** 2)
    truncated = bool(sol.t_events[0].size)
    return ODESolution(sol.t, m, md, en, float(np.max(np.abs(en - en[0]))), truncated)


def degenerate_q3_curvatures(C1: float, mu2_0: float, mu2_dot_0: float,
                             s_max: float = 10.0, num: int = 1001) -> ODESolution:
    """Numerical solution of mu2'' = mu2^3 + 2 mu1 mu2 with mu1 = -3/2 mu2^2 + C1."""
    return integrate_q4_curvatures(C1, 0.0, mu2_0, mu2_dot_0, s_max, num)
