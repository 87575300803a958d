"""Jacobi elliptic functions and first-kind integrals.

Every function takes the *modulus* k (not the parameter m = k^2), matching
the closed-form curvature formula that consumes these routines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EllipticModulus",
    "agm",
    "complete_first_kind",
    "jacobi_sn_cn_dn",
    "jacobi_sd",
    "jacobi_sd_derivative",
    "carlson_rf",
    "incomplete_first_kind_phi",
    "inverse_sd",
    "incomplete_first_kind",
]

_MAX_AGM_STEPS = 60
_MAX_LANDEN_DEPTH = 20
_HYPERBOLIC_SWITCH = 1e-8


@dataclass(frozen=True)
class EllipticModulus:
    k: float

    def __post_init__(self):
        if not (0.0 <= self.k <= 1.0):
            raise ValueError(f"modulus must lie in [0, 1], got {self.k}")

    @property
    def k_complement(self) -> float:
        return float(np.sqrt((1.0 - self.k) * (1.0 + self.k)))


def _modulus(m) -> float:
    return m.k if isinstance(m, EllipticModulus) else float(EllipticModulus(float(m)).k)


def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean of two positive numbers."""
    if a <= 0 or b <= 0:
        raise ValueError("agm needs positive arguments")
    for _ in range(_MAX_AGM_STEPS):
        if abs(a - b) <= 2e-16 * a:
            break
        a, b = 0.5 * (a + b), np.sqrt(a * b)
    return float(0.5 * (a + b))


def complete_first_kind(m) -> float:
    """K(k) = pi / (2 agm(1, k'))."""
    k = _modulus(m)
    kc = np.sqrt((1.0 - k) * (1.0 + k))
    if kc == 0.0:
        return float("inf")
    return float(np.pi / (2.0 * agm(1.0, kc)))


def _hyperbolic_limit(u, kc):
    # first-order expansion in k'^2 around k = 1
    t, sech = np.tanh(u), 1.0 / np.cosh(u)
    w = 0.25 * kc * kc * (np.sinh(u) * np.cosh(u) - u)
    sn = t + w * sech * sech
    cn = sech - w * t * sech
    dn = sech + 0.25 * kc * kc * (np.sinh(u) * np.cosh(u) + u) * t * sech
    return sn, cn, dn


def jacobi_sn_cn_dn(u, m):
    """(sn, cn, dn)(u, k) by the descending Landen / AGM scheme.

    ``u`` may be an array.  The argument is reduced modulo the real period 4K
    before the AGM recursion; dn is recovered from cn and sn to keep
    ``dn^2 + k^2 sn^2 = 1`` at rounding level.
    """
    k = _modulus(m)
    u = np.asarray(u, dtype=float)
    kc = np.sqrt((1.0 - k) * (1.0 + k))
    if kc < _HYPERBOLIC_SWITCH:
        return _hyperbolic_limit(u, kc)

    K = complete_first_kind(k)
    ur = u - 4.0 * K * np.round(u / (4.0 * K))

    a, b, c = 1.0, kc, k
    a_list, c_list = [a], [c]
    for _ in range(_MAX_LANDEN_DEPTH):
        if abs(c) <= 1e-16 * a:
            break
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        a_list.append(a)
        c_list.append(c)
    N = len(a_list) - 1
    phi = (2.0 ** N) * a_list[-1] * ur
    for i in range(N, 0, -1):
        phi = 0.5 * (phi + np.arcsin(np.clip(c_list[i] / a_list[i] * np.sin(phi), -1.0, 1.0)))
    sn, cn = np.sin(phi), np.cos(phi)
    dn = np.sqrt(cn * cn + kc * kc * sn * sn)
    return sn, cn, dn


def jacobi_sd(u, m):
    sn, _, dn = jacobi_sn_cn_dn(u, m)
    return sn / dn


def jacobi_sd_derivative(u, m):
    """d sd / du = cn / dn^2."""
    _, cn, dn = jacobi_sn_cn_dn(u, m)
    return cn / (dn * dn)


def carlson_rf(x: float, y: float, z: float, rtol: float = 1e-16) -> float:
    """Carlson's symmetric integral R_F by the duplication theorem."""
    if min(x, y, z) < 0 or (x == 0) + (y == 0) + (z == 0) > 1:
        raise ValueError("R_F needs nonnegative arguments with at most one zero")
    for _ in range(100):
        mu = (x + y + z) / 3.0
        dx, dy, dz = 1 - x / mu, 1 - y / mu, 1 - z / mu
        if max(abs(dx), abs(dy), abs(dz)) < 1e-4:
            e2 = dx * dy - dz * dz
            e3 = dx * dy * dz
            return float((1 - e2 / 10 + e3 / 14 + e2 * e2 / 24 - 3 * e2 * e3 / 44) / np.sqrt(mu))
        sx, sy, sz = np.sqrt(x), np.sqrt(y), np.sqrt(z)
        lam = sx * sy + sy * sz + sz * sx
        x, y, z = (x + lam) / 4, (y + lam) / 4, (z + lam) / 4
    raise RuntimeError("R_F did not converge")


def incomplete_first_kind_phi(phi: float, m) -> float:
    """F(phi, k) for |phi| <= pi/2."""
    k = _modulus(m)
    s, c = np.sin(phi), np.cos(phi)
    return float(s * carlson_rf(c * c, 1.0 - (k * s) ** 2, 1.0))


def _inverse_sd(y: float, k: float, cn2_numer: float) -> float:
    # cn^2 = (1 - k'^2 y^2) / (1 + k^2 y^2); numerator passed in to avoid cancellation
    d = 1.0 + (k * y) ** 2
    sn = y / np.sqrt(d)
    return float(sn * carlson_rf(max(cn2_numer, 0.0) / d, 1.0 / d, 1.0))


def inverse_sd(y: float, m) -> float:
    """The u in [-K, K] with sd(u, k) = y."""
    k = _modulus(m)
    kc2 = (1.0 - k) * (1.0 + k)
    return _inverse_sd(y, k, 1.0 - kc2 * y * y)


def incomplete_first_kind(x: float, a: float, b: float) -> float:
    """Integral of 1 / (sqrt(b^2 - t^2) sqrt(a^2 + t^2)) from 0 to x, for 0 <= x <= b.

    Evaluated as (a^2 + b^2)^{-1/2} sd^{-1}(x sqrt(a^2+b^2) / (a b), b / sqrt(a^2+b^2)).
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x < 0 or x > b:
        raise ValueError(f"x must lie in [0, b]; got x={x}, b={b}")
    r = np.hypot(a, b)
    # k'^2 y^2 = x^2 / b^2 for this substitution
    return _inverse_sd(x * r / (a * b), b / r, (b - x) * (b + x) / (b * b)) / r
