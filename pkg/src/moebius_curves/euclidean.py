"""Euclidean Frenet apparatus and its bridge to the conformal invariants.

Curvature and torsions come from Gram-Schmidt on the Taylor jets of the
curve, so their arclength derivatives (needed for the conformal density and
for mu_1) are exact jet derivatives rather than finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets as J
from .conformal import _arclength
from .jets import Jet
from .models import Curve

__all__ = [
    "EuclideanFrenetData",
    "euclidean_frenet",
    "frenet_residual",
    "conformal_density",
    "mu1_from_euclidean",
    "total_twist",
    "TwistResult",
]


@dataclass(frozen=True)
class EuclideanFrenetData:
    """Frenet data on a parameter grid.

    ``frame[i]`` has columns (F, E_1, ..., E_n): position then the Frenet
    vectors.  ``taus[j - 2]`` holds tau_j for j = 2..n-1.  The last Frenet
    vector completes a positive frame in dimensions 2 and 3 (so k, resp.
    tau_2, is signed); for n >= 4 every vector comes from Gram-Schmidt and all
    torsions are non-negative.
    """

    n: int
    t_grid: np.ndarray
    se_grid: np.ndarray
    speed: np.ndarray
    frame: np.ndarray
    k: np.ndarray
    taus: np.ndarray
    k_prime: np.ndarray
    Y_norm: np.ndarray
    Z_norm: np.ndarray
    genericity: np.ndarray
    k_jet: Jet
    tau_jets: tuple
    speed_jet: Jet
    frame_jet: Jet

    @property
    def k_vanishes(self) -> np.ndarray:
        return ~self.genericity[0]


def _safe_unit(u: Jet, scale: np.ndarray, tol: float):
    # zero vectors produce inf/nan in the norm series; they are masked below
    with np.errstate(divide="ignore", invalid="ignore"):
        nrm = J.norm(u)
    bad = nrm.value <= tol * scale
    if np.any(bad):
        c = nrm.c.copy()
        c[0, bad] = 1.0
        c[1:, bad] = 0.0
        nrm = Jet(c)
    return u * J.reciprocal(nrm).expand(-1), bad


def _cross(a: Jet, b: Jet) -> Jet:
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return J.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def euclidean_frenet(c: Curve, t=None, num: int = 401, order: int | None = None,
                     tol: float = 1e-10) -> EuclideanFrenetData:
    """Frenet frames, curvature and torsions of a curve in R^n."""
    if c.ambient != "euclidean":
        c = c.to_euclidean()
    n = c.dim
    if n < 2:
        raise ValueError("curves in R^n need n >= 2")
    t = c.grid(num) if t is None else np.atleast_1d(np.asarray(t, dtype=float))
    N = min(max(n + 2, 6), c.max_order) if order is None else order
    if N < n + 1:
        raise ValueError(f"Frenet apparatus in R^{n} needs {n + 1} derivatives")
    x = c.taylor(t, N)
    D = [x]
    for _ in range(n):
        D.append(D[-1].deriv())
    v = J.norm(D[1])
    scale = 1.0 + np.max(np.abs(x.value), axis=-1)
    if np.any(v.value <= 1e-14 * scale):
        raise ValueError("not an immersion: derivative vanishes")

    E = [D[1] * J.reciprocal(v).expand(-1)]
    flags = []
    last_gs = n if n >= 4 else n - 1
    for j in range(2, last_gs + 1):
        u = D[j]
        for Ei in E:
            u = u - Ei * J.dot(u, Ei).expand(-1)
        # degeneracy is measured relative to |c'|^j
        Ej, bad = _safe_unit(u, v.value ** j, tol)
        E.append(Ej)
        flags.append(~bad)
    if n == 2:
        e1 = E[0]
        E.append(J.stack([-1.0 * e1[..., 1], e1[..., 0]], axis=-1))
    elif n == 3:
        E.append(_cross(E[0], E[1]))
    o = min(e.order for e in E)
    E = [e.truncate(o) for e in E]

    vinv = J.reciprocal(v.truncate(o - 1))
    curv = [J.dot(E[j].deriv(), E[j + 1].truncate(o - 1)) * vinv for j in range(n - 1)]
    k = curv[0]
    taus = curv[1:]
    kp = k.deriv() * vinv.truncate(k.order - 1)

    genericity = np.ones((n - 1, t.size), dtype=bool)
    genericity[0] = np.abs(k.value) > tol * (1 + np.abs(k.value).max())
    for j, tj in enumerate(taus):
        genericity[j + 1] = np.abs(tj.value) > tol * (1 + np.abs(tj.value).max())
    for j, fl in enumerate(flags):
        if j < n - 1:
            genericity[j] &= fl

    Y = np.abs(taus[0].value) if n >= 3 else np.zeros(t.size)
    Z = np.sqrt(kp.value ** 2 + k.value ** 2 * Y ** 2)
    frame_jet = J.stack([x.truncate(o)] + E, axis=-1)
    return EuclideanFrenetData(
        n=n,
        t_grid=t,
        se_grid=_arclength(t, v, np.zeros(t.size, dtype=bool)),
        speed=v.value,
        frame=frame_jet.value,
        k=k.value,
        taus=np.array([tj.value for tj in taus]).reshape(n - 2, t.size),
        k_prime=kp.value,
        Y_norm=Y,
        Z_norm=Z,
        genericity=genericity,
        k_jet=k,
        tau_jets=tuple(taus),
        speed_jet=v,
        frame_jet=frame_jet,
    )


def frenet_residual(d: EuclideanFrenetData) -> np.ndarray:
    """max |dE/ds_e - E phi| per sample, with phi the classical Frenet matrix."""
    n = d.n
    E = d.frame_jet[..., 1:]
    dE = E.deriv().value / d.speed[:, None, None]
    phi = np.zeros((d.t_grid.size, n, n))
    curv = [d.k] + list(d.taus)
    for j, kj in enumerate(curv):
        phi[:, j + 1, j] = kj
        phi[:, j, j + 1] = -kj
    return np.max(np.abs(dE - E.value @ phi), axis=(-1, -2))


def conformal_density(d: EuclideanFrenetData) -> np.ndarray:
    """ds / ds_e = ((k')^2 + k^2 |Y|^2)^{1/4}; zero at vertices."""
    return np.sqrt(d.Z_norm)


def mu1_from_euclidean(d: EuclideanFrenetData, vertex_tol: float = 1e-8) -> np.ndarray:
    """mu_1 = (r')^2 / 2 - r^2 k^2 / 2 - r r'' with r = |Z|^{-1/2}, primes in s_e."""
    k, kp = d.k_jet, None
    vinv = J.reciprocal(d.speed_jet)
    kp = k.deriv() * vinv.truncate(k.order - 1)
    if d.n >= 3:
        tau = d.tau_jets[0]
        o = min(kp.order, tau.order)
        Z2 = kp.truncate(o) * kp.truncate(o) + (k * k * tau * tau).truncate(o)
    else:
        Z2 = kp * kp
    if np.any(np.sqrt(Z2.value) <= vertex_tol):
        raise ValueError("vertex in range: conformal density vanishes")
    if Z2.order < 2:
        raise ValueError("mu_1 needs two more derivatives of the curve")
    r = J.power(Z2, -0.25)
    r1 = r.deriv() * vinv.truncate(r.order - 1)
    r2 = r1.deriv() * vinv.truncate(r1.order - 1)
    r0, r1, kk = r.value, r1.value, k.value
    return 0.5 * r1 ** 2 - 0.5 * r0 ** 2 * kk ** 2 - r0 * r2.value


@dataclass(frozen=True)
class TwistResult:
    value: float
    raw: float
    distance_to_integer: float


def total_twist(c: Curve, num: int = 1024, tol: float = 1e-10) -> TwistResult:
    """(1 / 2 pi) times the integral of tau ds_e over a closed curve in R^3, mod 1.

    The integrand is periodic, so the trapezoid rule on a uniform grid
    converges spectrally.
    """
    if not c.closed:
        raise ValueError("total twist needs a closed curve")
    d = euclidean_frenet(c, c.grid(num), order=min(5, c.max_order), tol=tol)
    if d.n != 3:
        raise ValueError("total twist is defined for curves in R^3")
    if np.any(~d.genericity[0]):
        raise ValueError("curvature vanishes: the Frenet frame is undefined")
    a, b = c.domain
    raw = float(np.sum(d.taus[0] * d.speed) * (b - a) / num / (2 * np.pi))
    val = raw % 1.0
    return TwistResult(val, raw, min(val, 1.0 - val))
