"""Curve representations and the charts linking R^n, S^n and the light cone.

A :class:`Curve` is anything that can hand out Taylor jets of its points at a
batch of parameter values.  Analytic curves are written once against the jet
arithmetic of :mod:`moebius_curves.jets` and get exact derivatives of every
order; sampled curves get finite-difference derivatives up to order 6.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from . import jets as J
from .jets import Jet
from .lorentz import LightRay, LorentzVector, MoebiusElement, _arr, is_moebius

__all__ = [
    "AMBIENTS",
    "Curve",
    "SampledCurve",
    "stereographic",
    "inverse_stereographic",
    "dirac_weyl",
    "dirac_weyl_ray",
    "sphere_to_homogeneous",
    "homogeneous_to_sphere",
    "homogeneous_to_euclidean",
    "euclidean_embed",
    "chart_swap",
    "derivatives_from_samples",
    "fd_weights",
    "read_csv",
    "write_csv",
]

AMBIENTS = ("euclidean", "sphere", "moebius")
_POLE_TOL = 1e-12


# ---------------------------------------------------------------------------
# charts


def stereographic(p) -> np.ndarray:
    """Projection of S^n minus N = (1, 0, ..., 0) onto R^n: x = p_A / (1 - p_0)."""
    p = np.asarray(p, dtype=float)
    d = 1.0 - p[..., 0]
    if np.any(np.abs(d) < _POLE_TOL):
        raise ValueError("pole: point coincides with the projection centre")
    return p[..., 1:] / d[..., None]


def inverse_stereographic(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1)
    p0 = (r2 - 1.0) / (r2 + 1.0)
    return np.concatenate([p0[..., None], 2.0 * x / (r2 + 1.0)[..., None]], axis=-1)


def dirac_weyl(x) -> np.ndarray:
    """Homogeneous representative (1, x, |x|^2 / 2); broadcasts over leading axes."""
    x = np.asarray(x, dtype=float)
    one = np.ones(x.shape[:-1] + (1,))
    return np.concatenate([one, x, 0.5 * np.sum(x * x, axis=-1, keepdims=True)], axis=-1)


def dirac_weyl_ray(x) -> LightRay:
    return LightRay.from_array(dirac_weyl(x))


def sphere_to_homogeneous(p) -> np.ndarray:
    """Light-cone representative of a point of S^n; the pole N goes to eta_{n+1}."""
    p = np.asarray(p, dtype=float)
    return np.concatenate(
        [(1.0 - p[..., :1]), p[..., 1:], 0.5 * (1.0 + p[..., :1])], axis=-1
    )


def homogeneous_to_sphere(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    c = 2.0 * v[..., -1] + v[..., 0]
    p0 = (2.0 * v[..., -1] - v[..., 0]) / c
    return np.concatenate([p0[..., None], 2.0 * v[..., 1:-1] / c[..., None]], axis=-1)


def homogeneous_to_euclidean(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if np.any(np.abs(v[..., 0]) < _POLE_TOL * np.max(np.abs(v), axis=-1)):
        raise ValueError("point at infinity has no Euclidean chart image")
    return v[..., 1:-1] / v[..., :1]


def euclidean_embed(x, A=None) -> MoebiusElement:
    """The rigid motion y -> A y + x as an element of the Möbius group."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    A = np.eye(n) if A is None else np.asarray(A, dtype=float)
    if A.shape != (n, n):
        raise ValueError("rotation block has the wrong size")
    if np.max(np.abs(A.T @ A - np.eye(n))) > 1e-10 or np.linalg.det(A) <= 0:
        raise ValueError("A must be special orthogonal")
    G = np.eye(n + 2)
    G[1:-1, 0] = x
    G[1:-1, 1:-1] = A
    G[-1, 0] = 0.5 * x @ x
    G[-1, 1:-1] = x @ A
    return MoebiusElement(n, G)


def chart_swap(n: int) -> np.ndarray:
    """Möbius involution exchanging eta_0 and eta_{n+1} (and flipping eta_1)."""
    P = np.eye(n + 2)
    P[0, 0] = P[-1, -1] = 0.0
    P[0, -1] = P[-1, 0] = 1.0
    P[1, 1] = -1.0
    return P


# ---------------------------------------------------------------------------
# curves


def _jet_dirac_weyl(x: Jet) -> Jet:
    one = Jet.constant(np.ones(x.shape[:-1] + (1,)), x.order)
    half = Jet((0.5 * (x * x).c.sum(axis=-1))[..., None])
    return Jet(np.concatenate([one.c, x.c, half.c], axis=-1))


def _jet_sphere(p: Jet) -> Jet:
    c = p.c
    out = np.concatenate([-c[..., :1], c[..., 1:], 0.5 * c[..., :1]], axis=-1)
    out[0, ..., 0] += 1.0
    out[0, ..., -1] += 0.5
    return Jet(out)


@dataclass(frozen=True)
class Curve:
    """A parametrized curve handing out Taylor jets.

    ``taylor_fn(t, order)`` returns a :class:`Jet` of value shape
    ``(len(t), dim)`` whose coefficients are the scaled derivatives at ``t``.
    ``max_order`` caps the derivative order the oracle can supply.
    """

    taylor_fn: Callable[[np.ndarray, int], Jet]
    domain: tuple
    ambient: str
    closed: bool = False
    max_order: int = 64
    dim: int = field(default=0)

    def __post_init__(self):
        if self.ambient not in AMBIENTS:
            raise ValueError(f"ambient must be one of {AMBIENTS}")
        a, b = self.domain
        if not b > a:
            raise ValueError("empty domain")
        if self.dim == 0:
            object.__setattr__(self, "dim", int(self.taylor_fn(np.array([a]), 0).shape[-1]))

    # construction -----------------------------------------------------------
    @classmethod
    def from_jet_function(cls, fn, domain, ambient="euclidean", closed=False) -> "Curve":
        """Wrap ``fn(t: Jet) -> Jet``; derivatives come from jet arithmetic."""

        def taylor(t, order):
            return fn(Jet.variable(np.asarray(t, dtype=float), order))

        return cls(taylor, tuple(domain), ambient, closed)

    @classmethod
    def from_derivatives(cls, deriv, domain, ambient="euclidean", closed=False,
                         max_order=64) -> "Curve":
        """Wrap ``deriv(t, m) -> array (len(t), dim)`` giving the m-th derivative."""

        def taylor(t, order):
            if order > max_order:
                raise ValueError(f"derivative oracle supports order <= {max_order}")
            t = np.asarray(t, dtype=float)
            return Jet.from_derivatives(np.stack([deriv(t, m) for m in range(order + 1)]))

        return cls(taylor, tuple(domain), ambient, closed, max_order)

    # evaluation ---------------------------------------------------------------
    @property
    def n(self) -> int:
        """Dimension of the conformal sphere the curve lives in."""
        return {"euclidean": self.dim, "sphere": self.dim - 1, "moebius": self.dim - 2}[self.ambient]

    def taylor(self, t, order: int) -> Jet:
        if order > self.max_order:
            raise ValueError(f"curve supports derivatives up to order {self.max_order}")
        return self.taylor_fn(np.atleast_1d(np.asarray(t, dtype=float)), order)

    def evaluate(self, t) -> np.ndarray:
        return self.taylor(t, 0).value

    def derivative(self, t, m: int) -> np.ndarray:
        return self.taylor(t, m).derivatives()[m]

    def homogeneous_taylor(self, t, order: int) -> Jet:
        """Jets of a light-cone lift in R^{n+2}."""
        x = self.taylor(t, order)
        if self.ambient == "euclidean":
            return _jet_dirac_weyl(x)
        if self.ambient == "sphere":
            return _jet_sphere(x)
        return x

    def grid(self, num: int) -> np.ndarray:
        a, b = self.domain
        return np.linspace(a, b, num, endpoint=not self.closed)

    # transformations ---------------------------------------------------------
    def moved(self, G) -> "Curve":
        """Image under a Möbius motion, as a curve on the light cone."""
        G = _arr(G)
        base = self

        def taylor(t, order):
            return base.homogeneous_taylor(t, order) @ G.T

        return Curve(taylor, self.domain, "moebius", self.closed, self.max_order)

    def to_euclidean(self) -> "Curve":
        """Read the curve back in the Dirac-Weyl chart (fails through infinity)."""
        if self.ambient == "euclidean":
            return self
        base = self

        def taylor(t, order):
            v = base.homogeneous_taylor(t, order)
            return v[..., 1:-1] * J.reciprocal(v[..., 0]).expand(-1)

        return Curve(taylor, self.domain, "euclidean", self.closed, self.max_order)

    def padded(self, n_new: int) -> "Curve":
        """The same curve inside a larger sphere, extra coordinates set to zero."""
        base = self
        n_old = self.n
        if n_new < n_old:
            raise ValueError("cannot pad to a smaller dimension")

        def taylor(t, order):
            v = base.homogeneous_taylor(t, order)
            c = v.c
            z = np.zeros(c.shape[:-1] + (n_new - n_old,))
            return Jet(np.concatenate([c[..., :-1], z, c[..., -1:]], axis=-1))

        return Curve(taylor, self.domain, "moebius", self.closed, self.max_order)


# ---------------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class SampledCurve:
    ts: np.ndarray
    points: np.ndarray
    ambient: str = "euclidean"
    closed: bool = False

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] != ts.shape[0]:
            raise ValueError("points must be (len(ts), dim)")
        if ts.shape[0] < 9:
            raise ValueError("at least 9 samples are required")
        if np.any(np.diff(ts) <= 0):
            raise ValueError("parameter grid must be strictly increasing")
        if self.ambient not in AMBIENTS:
            raise ValueError(f"ambient must be one of {AMBIENTS}")
        object.__setattr__(self, "ts", ts)
        object.__setattr__(self, "points", pts)


def fd_weights(offsets: np.ndarray, m: int) -> np.ndarray:
    """Weights w with sum_j w_j f(x + offsets_j) ~ f^(m)(x) (Vandermonde solve)."""
    offsets = np.asarray(offsets, dtype=float)
    q = offsets.shape[0]
    scale = np.max(np.abs(offsets))
    z = offsets / scale
    V = np.vander(z, q, increasing=True).T
    rhs = np.zeros(q)
    rhs[m] = math.factorial(m)
    return np.linalg.solve(V, rhs) / scale ** m


def _stencil_size(m: int, accuracy: int) -> int:
    return 2 * ((m + 1) // 2) - 1 + accuracy


def derivatives_from_samples(c: SampledCurve, order: int, accuracy: int = 4) -> Curve:
    """Finite-difference derivative oracle on the sample grid.

    Interior stencils are centred; near the ends they are shifted one-sided
    with ``m + accuracy`` points, or wrapped when the curve is closed (closed
    input repeats the first point as the last row).  Between grid nodes the
    derivative arrays are interpolated with cubic splines.
    """
    if order > 6:
        raise ValueError("finite-difference oracle supports order <= 6")
    ts, pts = c.ts, c.points
    if c.closed:
        if np.max(np.abs(pts[0] - pts[-1])) > 1e-8 * (1 + np.max(np.abs(pts))):
            raise ValueError("closed sample curve must repeat its first point at the end")
        period = ts[-1] - ts[0]
        ts_core, pts_core = ts[:-1], pts[:-1]
    else:
        ts_core, pts_core = ts, pts
    h = np.diff(ts)
    if h.max() / h.min() > 1.5:
        raise ValueError("grid spacing must be quasi-uniform (max/min <= 1.5)")
    N = ts_core.shape[0]
    need = _stencil_size(order, accuracy) if c.closed else order + accuracy
    if N < max(need, 9):
        raise ValueError(f"too few samples ({N}) for derivative order {order}")

    derivs = np.zeros((order + 1,) + pts_core.shape)
    derivs[0] = pts_core
    for m in range(1, order + 1):
        q = _stencil_size(m, accuracy)
        half = q // 2
        for i in range(N):
            if c.closed:
                idx = np.arange(i - half, i + half + 1)
                offs = ts_core[idx % N] - ts_core[i] + period * np.floor_divide(idx, N)
                w = fd_weights(offs, m)
                derivs[m, i] = w @ pts_core[idx % N]
            else:
                if half <= i < N - half:
                    idx = np.arange(i - half, i + half + 1)
                else:
                    q1 = min(m + accuracy, N)
                    start = 0 if i < half else N - q1
                    idx = np.arange(start, start + q1)
                w = fd_weights(ts_core[idx] - ts_core[i], m)
                derivs[m, i] = w @ pts_core[idx]

    if c.closed:
        grid = np.concatenate([ts_core, [ts_core[0] + period]])
        data = np.concatenate([derivs, derivs[:, :1]], axis=1)
        splines = [CubicSpline(grid, data[m], bc_type="periodic") for m in range(order + 1)]
    else:
        grid, data = ts_core, derivs
        splines = [CubicSpline(grid, data[m]) for m in range(order + 1)]

    def deriv(t, m):
        t = np.asarray(t, dtype=float)
        if c.closed:
            t = ts_core[0] + np.mod(t - ts_core[0], period)
        idx = np.searchsorted(grid, t)
        idx = np.clip(idx, 0, len(grid) - 1)
        exact = np.isclose(grid[idx], t, rtol=0, atol=1e-12 * (1 + abs(grid[-1])))
        out = splines[m](t)
        out[exact] = data[m][idx[exact]]
        return out

    return Curve.from_derivatives(deriv, (ts[0], ts[-1]), c.ambient, c.closed, order)


# ---------------------------------------------------------------------------
# CSV interchange

_PREFIX = {"x": "euclidean", "p": "sphere", "v": "moebius", "e0_": "moebius"}


def read_csv(path) -> SampledCurve:
    """Read ``t,<coords>`` with the header prefix choosing the ambient space.

    ``x1..xn`` are Euclidean points, ``p0..pn`` sphere points and
    ``v0..v{n+1}`` (or ``e0_0..``) light-cone coordinates.  A first column
    named ``s`` is accepted in place of ``t``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    if header[0] not in ("t", "s"):
        raise ValueError("first column must be 't' or 's'")
    cols = header[1:]
    ambient = None
    for pre in sorted(_PREFIX, key=len, reverse=True):
        if cols and all(c.startswith(pre) for c in cols):
            ambient = _PREFIX[pre]
            break
    if ambient is None:
        raise ValueError(f"cannot infer coordinates from header {header}")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    ts, pts = data[:, 0], data[:, 1:]
    closed = bool(np.max(np.abs(pts[0] - pts[-1])) <= 1e-10 * (1 + np.max(np.abs(pts))))
    return SampledCurve(ts, pts, ambient, closed)


def write_csv(path, header, columns) -> None:
    arr = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in arr:
            w.writerow([repr(float(v)) for v in row])
