"""Seeded property suite behind ``moebius verify``.

Each check returns a :class:`CheckResult` with the measured residuals and the
thresholds they were compared against.  Results are ordered by name so that
reports are byte-identical for a fixed seed.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad

from . import jets as J
from .conformal import classify_degeneracy, reconstruct_from_invariants, reduce_frames, trace_invariant
from .elliptic import complete_first_kind, incomplete_first_kind, jacobi_sn_cn_dn
from .euclidean import conformal_density, euclidean_frenet, mu1_from_euclidean, total_twist
from .geodesics import (
    build_geodesic,
    chi_theta_coeffs,
    conserved_omega,
    el_residual,
    integrate_q4_curvatures,
    lax_matrix,
    p_minus_identity_coeffs,
    random_admissible_triple,
    spectral_values,
    triple_from_roots,
    verify_codimension_reduction,
)
from .lorentz import char_poly, random_moebius, spectral_split
from .models import Curve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: dict
    thresholds: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SuiteConfig:
    seed: int = 0
    perturb: float = 0.0
    tol_algebra: float = 1e-9
    tol_ode: float = 1e-6


def _f(x) -> float:
    return float(np.format_float_scientific(float(x), precision=6)) if np.isfinite(x) else float(x)


def polynomial_curve(coeffs: np.ndarray, domain=(-1.0, 1.0)) -> Curve:
    """Curve t -> sum_k coeffs[k] t^k in R^dim."""
    C = np.asarray(coeffs, dtype=float)

    def fn(t):
        x = t.expand(-1)
        out = x * 0.0 + C[-1]
        for k in range(C.shape[0] - 2, -1, -1):
            out = out * x + C[k]
        return out

    return Curve.from_jet_function(fn, domain, "euclidean")


def helix_curve(a: float = 1.0, b: float = 0.5, domain=(0.0, 10.0)) -> Curve:
    def fn(t):
        s, c = J.sincos(t)
        return J.stack([a * c, a * s, b * t], axis=-1)

    return Curve.from_jet_function(fn, domain, "euclidean")


def spherical_closed_curve(a: float = 0.7) -> Curve:
    """A closed curve on the unit sphere (seam of a tennis ball)."""
    b = 1.0 - a

    def fn(t):
        s1, c1 = J.sincos(t)
        s3, c3 = J.sincos(3.0 * t)
        s2, _ = J.sincos(2.0 * t)
        return J.stack([a * c1 + b * c3, a * s1 - b * s3, 2 * np.sqrt(a * b) * s2], axis=-1)

    return Curve.from_jet_function(fn, (0.0, 2 * np.pi), "euclidean", closed=True)


def random_quartic(rng: np.random.Generator, dim: int) -> Curve:
    return polynomial_curve(rng.normal(size=(5, dim)))


# ---------------------------------------------------------------------------
# checks


def check_geodesic_pipeline(cfg: SuiteConfig) -> CheckResult:
    t = triple_from_roots(-1.0, 1.0, 2.0)
    g = build_geodesic(t)
    sol = g.curvatures
    d = reduce_frames(g.curve, num=401)
    s = d.t_grid
    rms = [float(np.sqrt(np.mean((d.mus[i] - f(s)) ** 2))) for i, f in enumerate((sol.mu1, sol.mu2, sol.mu3))]
    light = float(np.max(g.lightlike_residual(np.linspace(-3 * sol.period, 3 * sol.period, 601))))
    ok = max(rms) <= 1e-5 and light <= cfg.tol_algebra
    return CheckResult("geodesic_pipeline", ok, {"rms_mu": [_f(r) for r in rms], "lightlike": _f(light)},
                       {"rms_mu": 1e-5, "lightlike": cfg.tol_algebra})


def check_conservation(cfg: SuiteConfig) -> CheckResult:
    t = triple_from_roots(-1.0, 1.0, 2.0)
    g = build_geodesic(t)
    sol = g.curvatures
    s = np.linspace(0.0, 2 * sol.period, 801)
    energy = float(np.max(sol.energy_residual(s)))
    d = reduce_frames(g.curve, num=401)
    fi1 = d.mus[0] + 1.5 * d.mus[1] ** 2
    fi2 = d.mus[1] ** 2 * d.mus[2]
    drift = float(max(np.ptp(fi1), np.ptp(fi2)))
    lax = conserved_omega(sol, np.linspace(0.0, 2 * sol.period, 201), tol=np.inf).drift
    ok = energy <= cfg.tol_algebra and drift <= 1e-7 and lax <= 1e-7
    return CheckResult("conservation", ok,
                       {"energy": _f(energy), "first_integrals": _f(drift), "lax": _f(lax)},
                       {"energy": cfg.tol_algebra, "first_integrals": 1e-7, "lax": 1e-7})


def check_spectral(cfg: SuiteConfig) -> CheckResult:
    t = triple_from_roots(-1.0, 1.0, 2.0)
    sol = build_geodesic(t, with_split=False).curvatures
    chi = max(float(np.max(np.abs(char_poly(th) - chi_theta_coeffs(t))))
              for th in lax_matrix(sol, [0.0, 0.37, 1.3]))
    ident = float(np.max(np.abs(chi_theta_coeffs(t) - p_minus_identity_coeffs(t))))
    rng = np.random.default_rng(cfg.seed)
    bad = 0
    for _ in range(100):
        tr = random_admissible_triple(rng)
        _, (tp, t1, t2) = spectral_values(tr)
        xm, x1, x2 = tr.roots
        bad += not (t2 < -x2 < -x1 < t1 < 0 < -xm < tp)
    split = spectral_split(lax_matrix(sol, 0.0)[0])
    A = split.diagonalizer
    rt = float(np.max(np.abs(A @ lax_matrix(sol, 0.0)[0] @ np.linalg.inv(A) - split.block)))
    ok = chi <= 1e-12 and ident <= 1e-12 and bad == 0 and rt <= 1e-8
    return CheckResult("spectral", ok, {"chi": _f(chi), "identity": _f(ident), "interlacing_failures": bad,
                                        "block_roundtrip": _f(rt)},
                       {"chi": 1e-12, "block_roundtrip": 1e-8})


def check_euler_lagrange(cfg: SuiteConfig) -> CheckResult:
    t = triple_from_roots(-1.0, 1.0, 2.0)
    g = build_geodesic(t, with_split=False)
    sol = g.curvatures
    built = el_residual(reduce_frames(g.curve, num=201)).max
    eps = cfg.perturb
    s = np.linspace(0.0, 2 * sol.period, 401)
    m1, m2, m3 = sol.invariant_callables()

    def mu2(x, order):
        # mu2 + eps cos(s), as Taylor coefficients
        return m2(x, order) + eps * J.cos(J.Jet.variable(np.asarray(x, dtype=float), order)).c

    rc = reconstruct_from_invariants(s, [m1, mu2, m3], 4)
    recon = el_residual(reduce_frames(rc.curve, np.linspace(0.1, 2 * sol.period - 0.1, 201))).max
    rng = np.random.default_rng(cfg.seed + 1)
    non = [el_residual(reduce_frames(random_quartic(rng, 4), num=101)).max for _ in range(20)]
    ok = built <= 1e-5 and recon <= 1e-5 and min(non) >= 1e-2
    return CheckResult("euler_lagrange", ok,
                       {"built": _f(built), "reconstructed": _f(recon), "min_non_geodesic": _f(min(non))},
                       {"geodesic": 1e-5, "non_geodesic": 1e-2})


def check_codimension(cfg: SuiteConfig) -> CheckResult:
    g = build_geodesic(triple_from_roots(-1.0, 1.0, 2.0), with_split=False)
    G = random_moebius(cfg.seed + 2, 6, scale=0.3)
    d = reduce_frames(g.curve.padded(6).moved(G), num=401)
    r = verify_codimension_reduction(d)
    sv = r.stacked_singular_values
    ratio = float(sv[5] / max(sv[6], 1e-300))
    ok = bool(np.all(r.rank == 6)) and ratio >= 1e3 and r.span_drift <= 1e-6
    return CheckResult("codimension", ok, {"rank_min": int(r.rank.min()), "rank_max": int(r.rank.max()),
                                           "sv6_over_sv7": _f(ratio), "span_drift": _f(r.span_drift),
                                           "linear_residual": _f(r.linear_residual)},
                       {"sv6_over_sv7": 1e3, "span_drift": 1e-6})


def check_invariance(cfg: SuiteConfig) -> CheckResult:
    rng = np.random.default_rng(cfg.seed + 3)
    c = random_quartic(rng, 4)
    t = np.linspace(-0.9, 0.9, 61)
    ref = reduce_frames(c, t)
    worst = 0.0
    for i in range(50):
        G = random_moebius(cfg.seed * 1000 + i, 4, scale=0.3)
        d = reduce_frames(c.moved(G), t)
        worst = max(worst, float(np.max(np.abs(d.density - ref.density) / (1 + np.abs(ref.density)))),
                    float(np.max(np.abs(d.mus - ref.mus) / (1 + np.abs(ref.mus)))))
    return CheckResult("invariance", worst <= 1e-6, {"max_deviation": _f(worst)}, {"max_deviation": 1e-6})


def check_euclidean_bridge(cfg: SuiteConfig) -> CheckResult:
    a, b = 1.0, 0.5
    k, tau = a / (a * a + b * b), b / (a * a + b * b)
    h = helix_curve(a, b)
    e = euclidean_frenet(h)
    dens = float(np.max(np.abs(conformal_density(e) - np.sqrt(k * tau))))
    mu1_e = float(np.max(np.abs(mu1_from_euclidean(e) + k / (2 * tau))))
    mu1_c = float(np.max(np.abs(reduce_frames(h).mus[0] + k / (2 * tau))))
    rng = np.random.default_rng(cfg.seed + 4)
    d = reduce_frames(random_quartic(rng, 4), num=101)
    trace = 0.0
    for j in (2, 3):
        kj = trace_invariant(d, j)
        trace = max(trace, float(np.max(np.abs(kj - np.abs(d.mus[j - 1])) / np.abs(d.mus[j - 1]))))
    ok = dens <= 1e-8 and mu1_e <= 1e-6 and mu1_c <= 1e-6 and trace <= 1e-4
    return CheckResult("euclidean_bridge", ok, {"density": _f(dens), "mu1_euclidean": _f(mu1_e),
                                                "mu1_conformal": _f(mu1_c), "trace_relative": _f(trace)},
                       {"density": 1e-8, "mu1": 1e-6, "trace_relative": 1e-4})


def check_twist(cfg: SuiteConfig) -> CheckResult:
    c = spherical_closed_curve()
    base = total_twist(c)
    worst = 0.0
    for i in range(20):
        G = random_moebius(cfg.seed * 1000 + 500 + i, 3, scale=0.2)
        tw = total_twist(c.moved(G).to_euclidean())
        dv = abs(tw.value - base.value)
        worst = max(worst, min(dv, 1 - dv))
    ok = base.distance_to_integer <= 1e-6 and worst <= 1e-6
    return CheckResult("twist", ok, {"distance_to_integer": _f(base.distance_to_integer),
                                     "motion_deviation": _f(worst)}, {"twist": 1e-6})


def check_elliptic(cfg: SuiteConfig) -> CheckResult:
    u = np.linspace(-50, 50, 2001)
    ident = 0.0
    for k in np.linspace(0.0, 1.0, 11):
        sn, cn, dn = jacobi_sn_cn_dn(u, k)
        ident = max(ident, float(np.max(np.abs(sn ** 2 + cn ** 2 - 1))),
                    float(np.max(np.abs(dn ** 2 + k * k * sn ** 2 - 1))))
    law = 0.0
    for a in np.linspace(0.3, 2.0, 10):
        for b in np.linspace(0.3, 2.0, 10):
            x = 0.7 * b
            ref = quad(lambda s: 1 / (np.sqrt(b * b - s * s) * np.sqrt(a * a + s * s)), 0, x,
                       epsabs=1e-13, epsrel=1e-13, limit=200)[0]
            law = max(law, abs(incomplete_first_kind(x, a, b) - ref))
    kq = 1 / np.sqrt(2)
    Kref = quad(lambda th: 1 / np.sqrt(1 - kq * kq * np.sin(th) ** 2), 0, np.pi / 2, epsabs=1e-14, epsrel=1e-14)[0]
    kerr = abs(complete_first_kind(kq) - Kref)
    ok = ident <= 1e-12 and law <= 1e-10 and kerr <= 1e-12
    return CheckResult("elliptic", ok, {"identities": _f(ident), "lawden": _f(law), "K": _f(kerr)},
                       {"identities": 1e-12, "lawden": 1e-10, "K": 1e-12})


def check_degenerate(cfg: SuiteConfig) -> CheckResult:
    s = np.linspace(-3.0, 3.0, 301)
    rc = reconstruct_from_invariants(s, [0.7, 0.0, 0.0], 4, check_positive=False)
    d = reduce_frames(rc.curve, num=201)
    el = el_residual(d).max
    totally = classify_degeneracy(d)["totally"]
    C1, m0, md0 = 1.0, 1.2, 0.1
    q3 = integrate_q4_curvatures(C1, 0.0, m0, md0, s_max=4.0, num=401)
    diffs = []
    for C2 in (1e-3, 2e-3):
        q4 = integrate_q4_curvatures(C1, C2, m0, md0, s_max=4.0, num=401)
        diffs.append(float(np.max(np.abs(q4.mu2 - q3.mu2))))
    tiny = integrate_q4_curvatures(C1, 1e-6, m0, md0, s_max=4.0, num=401)
    d_tiny = float(np.max(np.abs(tiny.mu2 - q3.mu2)))
    ratio = diffs[1] / diffs[0]
    ok = el <= 1e-5 and 2 in totally and abs(ratio - 4.0) <= 0.2 and d_tiny <= 1e-9 \
        and q3.energy_drift <= 1e-8
    return CheckResult("degenerate", ok, {"constant_mu1_el": _f(el), "totally_degenerate": totally,
                                          "c2_scaling_ratio": _f(ratio), "c2_1e-6_deviation": _f(d_tiny),
                                          "q3_energy_drift": _f(q3.energy_drift)},
                       {"el": 1e-5, "c2_scaling_ratio": "4 +- 0.2", "c2_1e-6_deviation": 1e-9})


CHECKS = {
    "codimension": check_codimension,
    "conservation": check_conservation,
    "degenerate": check_degenerate,
    "elliptic": check_elliptic,
    "euclidean_bridge": check_euclidean_bridge,
    "euler_lagrange": check_euler_lagrange,
    "geodesic_pipeline": check_geodesic_pipeline,
    "invariance": check_invariance,
    "spectral": check_spectral,
    "twist": check_twist,
}


def run_suite(cfg: SuiteConfig, names=None, workers: int = 4) -> list[CheckResult]:
    names = sorted(CHECKS if names is None else names)

    def run(name):
        try:
            return CHECKS[name](cfg)
        except Exception as exc:  # a crashing check is a failed check
            log.exception("check %s raised", name)
            return CheckResult(name, False, {"error": f"{type(exc).__name__}: {exc}"})

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, names))
    return sorted(results, key=lambda r: r.name)


def report_dict(cfg: SuiteConfig, results: list[CheckResult]) -> dict:
    return {
        "config": asdict(cfg),
        "passed": all(r.passed for r in results),
        "checks": [asdict(r) for r in results],
    }
