"""Conformal frame reduction, invariants, osculating spheres and reconstruction.

The reduction works on Taylor jets of a light-cone lift f(t).  Starting from
the frame ``J(x, I) diag(a, I, 1/a)`` each step multiplies on the right by a
gauge matrix K built from the current Maurer-Cartan form
``phi = e^{-1} de/dt``:

1. a rotation so that only ``phi^1_0`` survives in the first column;
2. a translation killing ``phi^alpha_1``;
3. a scaling/rotation normalizing ``phi^0_alpha`` to ``(phi^1_0, 0, ...)``;
4. the shift killing ``phi^0_0``;
5. one rotation per remaining order, polarizing ``phi^{k..n}_{k-1}`` along e_k.

Every step costs one jet order, so the lift is expanded to order
``max(5, n + 2) + extra`` where ``extra`` orders are kept for derivatives of
the invariants.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import subspace_angles

from . import jets as J
from .jets import Jet
from .lorentz import inner, is_moebius, metric
from .models import Curve, chart_swap

log = logging.getLogger(__name__)

__all__ = [
    "ConformalFrenetData",
    "OsculatingSphere",
    "VertexError",
    "reduce_frames",
    "jet_order_needed",
    "mu_s_derivatives",
    "frenet_matrix",
    "frenet_matrix_jet",
    "classify_degeneracy",
    "reconstruct_from_invariants",
    "ReconstructedCurve",
    "as_invariant",
    "osculating_sphere",
    "osculating_projector",
    "trace_invariant",
    "trace_T",
    "sphere_defect",
]

DEFAULT_VERTEX_TOL = 1e-8
DEFAULT_DEGENERACY_TOL = 1e-8


class VertexError(ValueError):
    """The requested range contains a point where the conformal arclength degenerates."""


# ---------------------------------------------------------------------------
# small jet helpers


def _outer(a: Jet, b: Jet) -> Jet:
    return a.expand(-1) * b.expand(-2)


def _rotation_to(u: Jet) -> Jet:
    """SO(d)-valued jets whose first column is the unit jet ``u``.

    Per sample the rotation in the plane of (+-eta_1, u) is used, with the sign
    of eta_1 chosen to stay away from the antipodal singularity.
    """
    d = u.shape[-1]
    batch = u.shape[:-1]
    sgn = np.where(u.value[..., 0] >= 0, 1.0, -1.0)
    a = np.zeros(batch + (d,))
    a[..., 0] = sgn
    w = u + a
    denom = J.Jet(u.c[..., 0] * sgn) + 1.0
    R = (J.eye_like(d, batch, u.order) - _outer(w, w) / denom.expand(-1).expand(-1)
         + 2.0 * _outer(u, Jet.constant(a, u.order)))
    F = np.broadcast_to(np.eye(d), batch + (d, d)).copy()
    F[..., 0, 0] = sgn
    F[..., 1, 1] = sgn
    return Jet(R.c @ F)


def _embed_block(block: Jet, size: int, start: int) -> Jet:
    batch = block.shape[:-2]
    K = J.eye_like(size, batch, block.order)
    d = block.shape[-1]
    K.c[..., start:start + d, start:start + d] = block.c
    return K


def _maurer_cartan(e: Jet, S: np.ndarray) -> Jet:
    einv = S @ e.T @ S
    return einv @ e.deriv()


def _safe_norm(v: Jet, mask_bad: np.ndarray) -> Jet:
    """|v| as a jet, with a unit placeholder where ``mask_bad`` is set."""
    c = v.c.copy()
    c[:, mask_bad] = 0.0
    c[0, mask_bad, 0] = 1.0
    return J.norm(Jet(c)), Jet(c)


def jet_order_needed(n: int, extra: int = 2) -> int:
    steps = 4 + max(0, n - 3)
    return steps + 1 + extra


# ---------------------------------------------------------------------------
# data


@dataclass(frozen=True)
class ConformalFrenetData:
    """Output of :func:`reduce_frames`.

    ``frame[i]`` is the Frenet frame at ``t_grid[i]`` (columns e_0..e_{n+1}).
    ``mus[j]`` holds mu_{j+1}.  ``density`` is ds/dt.  ``degeneracy_norms[k-1]``
    is |X_(k)| for k = 1..n-1, measured per unit conformal arclength except at
    k = 1 where it is the normalized first obstruction.
    ``mu_jets`` and ``rho_jet`` keep t-Taylor data for s-derivatives.
    """

    n: int
    t_grid: np.ndarray
    s_grid: np.ndarray
    frame: np.ndarray
    mus: np.ndarray
    density: np.ndarray
    genericity_order: np.ndarray
    X_norm: np.ndarray
    degeneracy_norms: np.ndarray
    orientation: np.ndarray
    mu_jets: Jet
    rho_jet: Jet
    frame_jet: Jet
    curve: Curve | None = None
    tolerances: dict = field(default_factory=dict)

    @property
    def generic(self) -> np.ndarray:
        return self.genericity_order >= 1


def reduce_frames(
    c: Curve,
    t=None,
    num: int = 401,
    extra: int | None = None,
    vertex_tol: float = DEFAULT_VERTEX_TOL,
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
    require_generic: bool = False,
) -> ConformalFrenetData:
    """Frenet frames and conformal invariants of ``c`` at parameters ``t``.

    Vertex points (vanishing conformal density) get NaN invariants and
    genericity order 0 unless ``require_generic`` is set, in which case
    :class:`VertexError` is raised.
    """
    n = c.n
    if n < 2:
        raise ValueError("curves must live in a sphere of dimension >= 2")
    t = c.grid(num) if t is None else np.atleast_1d(np.asarray(t, dtype=float))
    base = jet_order_needed(n, 0)
    if extra is None:
        extra = max(0, min(2, c.max_order - base))
    N = base + extra
    if N > c.max_order:
        raise ValueError(
            f"reduction in dimension {n} needs derivatives up to order {base}; "
            f"curve supplies {c.max_order}"
        )
    S = metric(n)
    B = t.shape[0]
    f = c.homogeneous_taylor(t, N)

    # chart switch keeps the zeroth frame away from a = 0
    swap = f.value[:, 0] < f.value[:, -1]
    P = chart_swap(n)
    if np.any(swap):
        fc = f.c.copy()
        fc[:, swap] = fc[:, swap] @ P.T
        f = Jet(fc)
    a = f[:, 0]
    if np.any(a.value <= 0):
        raise ValueError("curve leaves the positive light cone")
    x = f[:, 1:-1] * J.reciprocal(a).expand(-1)
    e = Jet(np.zeros((N + 1, B, n + 2, n + 2)))
    e.c[..., :, 0] = f.c
    for A in range(1, n + 1):
        e.c[0, :, A, A] = 1.0
    e.c[..., -1, 1:-1] = x.c
    e.c[..., -1, -1] = J.reciprocal(a).c

    # step 1: first column along e_1
    phi = _maurer_cartan(e, S)
    v = phi[:, 1:-1, 0]
    vn = J.norm(v)
    if np.any(vn.value <= 1e-14 * (1.0 + np.abs(phi.value).max(axis=(-1, -2)))):
        raise ValueError("not an immersion: derivative vanishes")
    R1 = _rotation_to(v * J.reciprocal(vn).expand(-1))
    e = e @ _embed_block(R1, n + 2, 1)

    # step 2: kill phi^alpha_1
    phi = _maurer_cartan(e, S)
    rho0 = phi[:, 1, 0]
    h = phi[:, 2:-1, 1] * J.reciprocal(rho0).expand(-1)
    K2 = J.eye_like(n + 2, (B,), h.order)
    K2.c[..., 0, 2:-1] = h.c
    K2.c[..., 2:-1, -1] = h.c
    K2.c[..., 0, -1] = (0.5 * J.dot(h, h)).c
    e = e @ K2

    # step 3: normalize p
    phi = _maurer_cartan(e, S)
    rho0 = phi[:, 1, 0]
    p = phi[:, 0, 2:-1] * J.reciprocal(rho0).expand(-1)
    pn_val = np.sqrt(np.sum(p.value ** 2, axis=-1))
    h_val2 = np.sum(h.value ** 2, axis=-1)
    vertex = pn_val <= vertex_tol * (h_val2 + pn_val + 1e-300)
    if require_generic and np.any(vertex):
        raise VertexError(f"vertex at t = {t[vertex][:5]}")
    orientation = np.ones(B)
    if n == 2:
        pn, _ = _safe_norm(p, vertex)
        orientation = np.where(vertex, 1.0, np.sign(p.value[:, 0]))
        block = Jet.constant(np.ones((B, 1, 1)), pn.order)
    else:
        pn, p_safe = _safe_norm(p, vertex)
        block = _rotation_to(p_safe * J.reciprocal(pn).expand(-1))
    r = J.power(pn, -0.5)
    K3 = _embed_block(block, n + 2, 2)
    K3.c[..., 0, 0] = J.reciprocal(r).c
    K3.c[..., -1, -1] = r.c
    e = e @ K3

    # step 4: kill phi^0_0
    phi = _maurer_cartan(e, S)
    rho = phi[:, 1, 0]
    xs = phi[:, 0, 0] * J.reciprocal(rho)
    K4 = J.eye_like(n + 2, (B,), xs.order)
    K4.c[..., 0, 1] = xs.c
    K4.c[..., 1, -1] = xs.c
    K4.c[..., 0, -1] = (0.5 * xs * xs).c
    e = e @ K4

    # step 5: polarize X_(k-1) along e_k
    deg_norms = np.zeros((max(n - 1, 1), B))
    deg_norms[0] = np.where(vertex, 0.0, 1.0)
    phi = _maurer_cartan(e, S)
    for k in range(3, n):
        q = phi[:, k:n + 1, k - 1]
        qv = np.sqrt(np.sum(q.value ** 2, axis=-1)) / np.abs(rho.value)
        deg_norms[k - 2] = qv
        bad = qv <= degeneracy_tol
        qn, q_safe = _safe_norm(q, bad)
        C = _rotation_to(q_safe * J.reciprocal(qn).expand(-1))
        e = e @ _embed_block(C, n + 2, k)
        phi = _maurer_cartan(e, S)

    rho_f = phi[:, 1, 0]
    rinv = J.reciprocal(rho_f)
    mu_list = [phi[:, 0, 1] * rinv]
    for j in range(2, n):
        mu_list.append(phi[:, j + 1, j] * rinv)
    mu_jets = J.stack(mu_list, axis=-1)
    if n >= 3:
        deg_norms[n - 2] = np.abs(mu_jets.value[:, n - 2])

    frame = e.value.copy()
    if np.any(swap):
        frame[swap] = P @ frame[swap]
        ec = e.c.copy()
        ec[:, swap] = P @ ec[:, swap]
        e = Jet(ec)

    gen = np.zeros(B, dtype=int)
    alive = ~vertex
    gen[alive] = 1
    for k in range(2, n):
        alive = alive & (deg_norms[k - 1] > degeneracy_tol)
        gen[alive] = k

    mus = mu_jets.value.T.copy()
    mus[:, vertex] = np.nan
    # rho before normalization by |p| is not intrinsic; report ds/dt
    dens = np.where(vertex, 0.0, rho.value)
    X_norm = deg_norms[1] if n >= 3 else np.zeros(B)
    s_grid = _arclength(t, rho, vertex)
    return ConformalFrenetData(
        n=n,
        t_grid=t,
        s_grid=s_grid,
        frame=frame,
        mus=mus,
        density=dens,
        genericity_order=gen,
        X_norm=X_norm,
        degeneracy_norms=deg_norms,
        orientation=orientation,
        mu_jets=mu_jets,
        rho_jet=rho,
        frame_jet=e,
        curve=c,
        tolerances={"vertex": vertex_tol, "degeneracy": degeneracy_tol, "jet_order": N},
    )


def _arclength(t: np.ndarray, rho: Jet, vertex: np.ndarray) -> np.ndarray:
    """Cumulative integral of rho by two-point Hermite quadrature."""
    d = rho.derivatives()
    d = np.where(vertex[None, :], 0.0, d)
    h = np.diff(t)
    if rho.order >= 2:
        inc = (h / 2 * (d[0, :-1] + d[0, 1:]) + h ** 2 / 10 * (d[1, :-1] - d[1, 1:])
               + h ** 3 / 120 * (d[2, :-1] + d[2, 1:]))
    elif rho.order == 1:
        inc = h / 2 * (d[0, :-1] + d[0, 1:]) + h ** 2 / 12 * (d[1, :-1] - d[1, 1:])
    else:
        inc = h / 2 * (d[0, :-1] + d[0, 1:])
    return np.concatenate([[0.0], np.cumsum(inc)])


def mu_s_derivatives(d: ConformalFrenetData, order: int) -> np.ndarray:
    """Array (order+1, n-1, B) of d^k mu_j / ds^k for k = 0..order."""
    if order > d.mu_jets.order:
        raise ValueError(f"only {d.mu_jets.order} derivatives are available")
    rinv = J.reciprocal(d.rho_jet.truncate(d.mu_jets.order)).expand(-1)
    out = [d.mu_jets.value.T]
    cur = d.mu_jets
    for _ in range(order):
        cur = cur.deriv() * rinv.truncate(cur.order - 1)
        out.append(cur.value.T)
    return np.stack(out)


# ---------------------------------------------------------------------------
# Frenet matrices


def frenet_matrix(mus, n: int, orientation=1.0) -> np.ndarray:
    """Frenet Maurer-Cartan matrix phi(d/ds); ``mus`` is (n-1,) or (n-1, B)."""
    mus = np.asarray(mus, dtype=float)
    batch = mus.shape[1:]
    phi = np.zeros(batch + (n + 2, n + 2))
    o = np.asarray(orientation, dtype=float)
    phi[..., 1, 0] = 1.0
    phi[..., 0, 1] = mus[0]
    phi[..., n + 1, 1] = 1.0
    phi[..., 0, 2] = o if n == 2 else 1.0
    phi[..., 1, n + 1] = mus[0]
    phi[..., 2, n + 1] = o if n == 2 else 1.0
    for k in range(2, n):
        phi[..., k + 1, k] = mus[k - 1]
        phi[..., k, k + 1] = -mus[k - 1]
    return phi


def frenet_matrix_jet(mu_jets: Jet, n: int) -> Jet:
    """Same as :func:`frenet_matrix` for jets of shape (B, n-1)."""
    order = mu_jets.order
    batch = mu_jets.shape[:-1]
    phi = Jet(np.zeros((order + 1,) + batch + (n + 2, n + 2)))
    phi.c[0, ..., 1, 0] = 1.0
    phi.c[0, ..., n + 1, 1] = 1.0
    phi.c[0, ..., 0, 2] = 1.0
    phi.c[0, ..., 2, n + 1] = 1.0
    phi.c[..., 0, 1] = mu_jets.c[..., 0]
    phi.c[..., 1, n + 1] = mu_jets.c[..., 0]
    for k in range(2, n):
        phi.c[..., k + 1, k] = mu_jets.c[..., k - 1]
        phi.c[..., k, k + 1] = -mu_jets.c[..., k - 1]
    return phi


# ---------------------------------------------------------------------------
# reconstruction


def as_invariant(spec, s_grid=None) -> Callable[[np.ndarray, int], np.ndarray]:
    """Adapt a constant, an array on ``s_grid``, or a callable to (s, order) -> coefficients.

    Callables of one argument are treated as values only (order 0);
    two-argument callables must return Taylor coefficients of shape
    (order + 1, len(s)).
    """
    if callable(spec):
        try:
            spec(np.zeros(1), 0)
            return spec
        except TypeError:
            def value_only(s, order, _f=spec):
                out = np.zeros((order + 1, np.size(s)))
                out[0] = _f(np.asarray(s, dtype=float))
                return out

            return value_only
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 0:
        val = float(arr)

        def const(s, order):
            out = np.zeros((order + 1, np.size(s)))
            out[0] = val
            return out

        return const
    if s_grid is None:
        raise ValueError("sampled invariants need an s grid")
    cs = CubicSpline(np.asarray(s_grid, dtype=float), arr)

    def spline(s, order):
        s = np.asarray(s, dtype=float)
        out = np.zeros((order + 1, s.size))
        fact = 1.0
        for k in range(min(order, 3) + 1):
            if k:
                fact *= k
            out[k] = cs(s, k) / fact
        return out

    return spline


@dataclass(frozen=True)
class ReconstructedCurve:
    """Frames integrated from prescribed invariants, plus a Curve in Q_n.

    ``frames[i]`` is e(s_nodes[i]).  ``max_reprojection`` records the largest
    metric correction applied during integration.
    """

    n: int
    s_nodes: np.ndarray
    frames: np.ndarray
    invariants: tuple
    curve: Curve
    max_reprojection: float

    def frame_at(self, s) -> np.ndarray:
        return _frames_at(self, np.atleast_1d(np.asarray(s, dtype=float)))


def _mu_values(invs, s):
    return np.stack([f(s, 0)[0] for f in invs])


def _rk4_factors(invs, n, s0, h):
    """Per-step propagators M_k with e(s0+h) ~ e(s0) M_k (linear RK4, right action)."""
    A1 = frenet_matrix(_mu_values(invs, s0), n)
    A2 = frenet_matrix(_mu_values(invs, s0 + h / 2), n)
    A4 = frenet_matrix(_mu_values(invs, s0 + h), n)
    h_ = h[..., None, None]
    eye = np.eye(n + 2)
    B2 = (eye + h_ / 2 * A1) @ A2
    B3 = (eye + h_ / 2 * B2) @ A2
    B4 = (eye + h_ * B3) @ A4
    return eye + h_ / 6 * (A1 + 2 * B2 + 2 * B3 + B4)


def _project(e: np.ndarray, S: np.ndarray) -> tuple[np.ndarray, float]:
    E = S @ e.T @ S @ e
    corr = float(np.max(np.abs(E - np.eye(e.shape[0]))))
    return e @ (3 * np.eye(e.shape[0]) - E) / 2, corr


def _integrate(invs, n, s_start, s_end, e0, h_max, project_every=100):
    if s_end == s_start:
        return np.array([s_start]), e0[None].copy(), 0.0
    steps = max(1, int(np.ceil(abs(s_end - s_start) / h_max)))
    nodes = np.linspace(s_start, s_end, steps + 1)
    h = np.diff(nodes)
    M = _rk4_factors(invs, n, nodes[:-1], h)
    S = metric(n)
    out = np.empty((steps + 1, n + 2, n + 2))
    out[0] = e0
    e = e0.copy()
    worst = 0.0
    for k in range(steps):
        e = e @ M[k]
        if (k + 1) % project_every == 0:
            e, corr = _project(e, S)
            worst = max(worst, corr)
        out[k + 1] = e
    return nodes, out, worst


def reconstruct_from_invariants(
    s_grid,
    mus: Sequence,
    n: int,
    e_init=None,
    h_max: float | None = None,
    check_positive: bool = True,
) -> ReconstructedCurve:
    """Integrate de/ds = e phi(s) from the Frenet matrix with the given invariants.

    ``mus`` lists mu_1..mu_{n-1}; each entry is a constant, an array on
    ``s_grid``, or a callable (see :func:`as_invariant`).  The frame starts at
    ``e_init`` (identity by default) at ``s_grid[0]``... or at s = 0 if 0 lies
    inside the grid, integrating in both directions.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if len(mus) != n - 1:
        raise ValueError(f"need {n - 1} invariants for n = {n}")
    invs = tuple(as_invariant(m, s_grid) for m in mus)
    if check_positive and n >= 4:
        vals = _mu_values(invs, s_grid)
        if np.any(vals[1:n - 2] <= 0):
            raise ValueError("mu_k must be positive for 2 <= k <= n-2")
    grid_step = np.min(np.diff(s_grid)) if s_grid.size > 1 else 1e-3
    h_max = min(1e-3, grid_step) / 4 if h_max is None else h_max
    e0 = np.eye(n + 2) if e_init is None else np.asarray(e_init, dtype=float)
    s_lo, s_hi = float(s_grid[0]), float(s_grid[-1])
    anchor = 0.0 if s_lo <= 0.0 <= s_hi else s_lo
    n1, f1, w1 = _integrate(invs, n, anchor, s_hi, e0, h_max)
    n2, f2, w2 = _integrate(invs, n, anchor, s_lo, e0, h_max)
    nodes = np.concatenate([n2[::-1], n1[1:]])
    frames = np.concatenate([f2[::-1], f1[1:]])
    partial = ReconstructedCurve(n, nodes, frames, invs, None, max(w1, w2))

    def taylor(t, order):
        e = _frames_at(partial, np.asarray(t, dtype=float))
        return _frame_taylor(invs, n, np.asarray(t, dtype=float), e, order)[..., 0]

    curve = Curve(taylor, (s_lo, s_hi), "moebius", False)
    return ReconstructedCurve(n, nodes, frames, invs, curve, max(w1, w2))


def _frames_at(rc: ReconstructedCurve, s: np.ndarray) -> np.ndarray:
    idx = np.clip(np.searchsorted(rc.s_nodes, s), 1, len(rc.s_nodes) - 1)
    left = rc.s_nodes[idx - 1]
    right = rc.s_nodes[idx]
    use_left = (s - left) <= (right - s)
    base_idx = np.where(use_left, idx - 1, idx)
    base_s = rc.s_nodes[base_idx]
    e = rc.frames[base_idx].copy()
    h = s - base_s
    move = np.abs(h) > 0
    if np.any(move):
        M = _rk4_factors(rc.invariants, rc.n, base_s[move], h[move])
        e[move] = e[move] @ M
    return e


def _frame_taylor(invs, n, s, e_vals, order) -> Jet:
    """Taylor jets of e at s from e' = e phi, given jets of the invariants."""
    mu_c = np.stack([f(s, order) for f in invs], axis=-1)  # (order+1, B, n-1)
    phi = frenet_matrix_jet(Jet(mu_c), n).c
    E = np.zeros((order + 1,) + e_vals.shape)
    E[0] = e_vals
    for k in range(order):
        acc = np.zeros_like(e_vals)
        for i in range(k + 1):
            acc = acc + E[i] @ phi[k - i]
        E[k + 1] = acc / (k + 1)
    return Jet(E)


# ---------------------------------------------------------------------------
# osculating spheres and degeneracy


@dataclass(frozen=True)
class OsculatingSphere:
    order: int
    basis: np.ndarray  # (n+2, k+2) columns
    radius: float


def osculating_projector(W: np.ndarray) -> np.ndarray:
    """Lorentz-orthogonal projector onto the column span of W (batched)."""
    n = W.shape[-2] - 2
    S = metric(n)
    WT = np.swapaxes(W, -1, -2)
    G = WT @ S @ W
    return W @ np.linalg.solve(G, WT @ S)


def _sphere_basis(frame: np.ndarray, k: int) -> np.ndarray:
    idx = list(range(k + 1)) + [frame.shape[-1] - 1]
    return frame[..., :, idx]


def osculating_sphere(d: ConformalFrenetData, index: int, k: int,
                      check_tol: float = 1e-6) -> OsculatingSphere:
    """The order-k osculating sphere at sample ``index`` of ``d``.

    The span of e_0..e_k, e_{n+1} is compared with the span of the first
    k + 2 derivatives of e_0 (from the frame jets) by principal angles.
    """
    if d.genericity_order[index] < min(k, d.n - 1):
        raise ValueError("insufficient genericity for this order")
    n = d.n
    W = _sphere_basis(d.frame[index], k)
    order_avail = d.frame_jet.order
    if k + 1 <= order_avail and k < n:
        e0 = d.frame_jet[index, :, 0].derivatives()[: k + 2].T
        ang = subspace_angles(W, e0)
        if np.max(ang) > check_tol:
            raise ArithmeticError(f"frame span and derivative span differ by {np.max(ang):.2e} rad")
    P = osculating_projector(W)
    eta = np.zeros(n + 2)
    eta[-1] = 1.0
    q = -inner(P @ eta, eta)
    radius = float(1.0 / np.sqrt(q)) if q > 0 else float("inf")
    return OsculatingSphere(k, W, radius)


def trace_T(frame_a: np.ndarray, frame_b: np.ndarray, j: int) -> np.ndarray:
    """trace(P_a P_b) for the order-j osculating spheres of two frames."""
    Pa = osculating_projector(_sphere_basis(frame_a, j))
    Pb = osculating_projector(_sphere_basis(frame_b, j))
    return np.trace(Pa @ Pb, axis1=-2, axis2=-1)


def sphere_defect(frame_a: np.ndarray, frame_b: np.ndarray, j: int) -> np.ndarray:
    """(j + 2) - trace(P_a P_b), computed without cancellation.

    With M = e_a^{-1} e_b, the normal vectors e_{j+1..n}(b) have coordinates
    M[:, j+1..n] in frame a; the defect is the Lorentz norm of their part in
    V_j(a), a quadratic form in entries that are small when a ~ b.
    """
    n = frame_a.shape[-1] - 2
    S = metric(n)
    M = S @ np.swapaxes(frame_a, -1, -2) @ S @ frame_b
    rows = list(range(j + 1)) + [n + 1]
    B = M[..., rows, j + 1:n + 1]
    SV = S[np.ix_(rows, rows)]
    return np.einsum("...ri,rs,...si->...", B, SV, B)


def trace_invariant(d: ConformalFrenetData, j: int, h=None, return_T: bool = False):
    """k_j = sqrt(-T_hh / 2) from traces of nearby osculating j-spheres.

    ``h`` is a step in conformal arclength (scalar or per sample).  By default
    it is ``5e-3 / L`` with ``L = 1 + max_k |mu_k| + sqrt|mu_1|`` the local rate
    at which the frame turns.  Frames at the shifted parameters come from
    independent reductions, and T_hh uses five-point stencils at h and h/2
    combined by Richardson extrapolation.
    """
    n = d.n
    if not 2 <= j <= n - 1:
        raise ValueError("j must lie in 2..n-1")
    if d.curve is None:
        raise ValueError("trace invariant needs the underlying curve")
    t = d.t_grid
    mus = np.nan_to_num(d.mus)
    L = 1.0 + np.sqrt(np.abs(mus[0]))
    if n >= 3:
        L = L + np.abs(mus[1:]).max(axis=0)
    suggested = 5e-3 / L
    h = suggested if h is None else np.broadcast_to(np.asarray(h, dtype=float), t.shape)
    if np.any(h < 1e-5 / L):
        raise ValueError(f"h too small for stable differencing; try h = {np.min(suggested):.1e}")
    dt = h / np.where(d.density > 0, d.density, np.nan)
    # T = (j + 2) - D with D(0) = 0; differentiate D, which carries no cancellation.
    # D is sampled at multiples of h/2: the stencils at h and h/2 are combined
    # by one Richardson step, which removes the h^4 error term.
    D = {0: sphere_defect(d.frame, d.frame, j)}
    for m in (-4, -2, -1, 1, 2, 4):
        D[m] = sphere_defect(d.frame, reduce_frames(d.curve, t + 0.5 * m * dt, extra=0).frame, j)

    def stencil(a, hh):
        return (-D[2 * a] + 16 * D[a] - 30 * D[0] + 16 * D[-a] - D[-2 * a]) / (12 * hh ** 2)

    Dhh = (16 * stencil(1, 0.5 * h) - stencil(2, h)) / 15
    kj = np.sqrt(np.maximum(0.5 * Dhh, 0.0))
    if return_T:
        dT = -(-D[4] + 8 * D[2] - 8 * D[-2] + D[-4]) / (12 * h)
        return kj, {"T0": (j + 2) - D[0], "dT": dT, "Thh": -Dhh, "h": h}
    return kj


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    out, i, N = [], 0, len(mask)
    while i < N:
        if mask[i]:
            j = i
            while j < N and mask[j]:
                j += 1
            out.append((i, j))
            i = j
        else:
            i += 1
    return out


def classify_degeneracy(d: ConformalFrenetData, tol: float = 1e-6,
                        min_run: int = 5) -> dict:
    """Per order k, intervals where |X_(k)| < tol, with span-drift witnesses.

    Returns a dict with keys ``intervals`` {k: [(i0, i1), ...]},
    ``isolated`` {k: [...]} for runs shorter than ``min_run`` samples,
    ``witness`` {k: basis of span(e_0..e_k, e_{n+1}) at the run start}, and
    ``drift`` {k: max principal angle of that span along the run}.
    ``totally`` lists the orders k for which the whole grid is degenerate
    while the lower orders are generic.
    """
    n = d.n
    B = d.t_grid.size
    norms = {}
    norms[1] = np.where(np.isnan(d.density) | (d.density <= 0), 0.0, np.abs(d.density))
    for k in range(2, n):
        norms[k] = d.degeneracy_norms[k - 1]
    report = {"intervals": {}, "isolated": {}, "witness": {}, "drift": {}, "totally": []}
    for k in range(1, n):
        mask = norms[k] < tol
        runs = _runs(mask)
        report["intervals"][k] = [r for r in runs if r[1] - r[0] >= min_run]
        report["isolated"][k] = [r for r in runs if r[1] - r[0] < min_run]
        if report["intervals"][k]:
            i0, i1 = report["intervals"][k][0]
            W0 = _sphere_basis(d.frame[i0], k)
            drift = 0.0
            if k == 1:
                # span e_0, e_1, e_{n+1} is not reduced at a vertex; use the
                # derivative span of the point instead
                W0 = _derivative_span(d, i0, 3)
                for i in range(i0, i1):
                    drift = max(drift, float(np.max(subspace_angles(W0, _derivative_span(d, i, 3)))))
            else:
                for i in range(i0, i1):
                    drift = max(drift, float(np.max(subspace_angles(W0, _sphere_basis(d.frame[i], k)))))
            report["witness"][k] = W0
            report["drift"][k] = drift
        lower_generic = all(np.all(norms[j] >= tol) for j in range(1, k))
        if lower_generic and np.all(mask):
            report["totally"].append(k)
    return report


def _derivative_span(d: ConformalFrenetData, i: int, count: int) -> np.ndarray:
    f = d.curve.homogeneous_taylor(d.t_grid[i:i + 1], count - 1)
    return f.c[:, 0, :].T
