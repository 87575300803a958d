"""Command-line interface: ``moebius {geodesic,invariants,convert,twist,verify}``.

Exit codes: 0 success, 1 I/O or parse error (and failed ``verify`` checks),
2 invalid mathematical input, 3 partial output because of degenerate points.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .conformal import reduce_frames
from .euclidean import euclidean_frenet
from .geodesics import (
    InadmissibleTriple,
    admissible,
    build_geodesic,
    classify_triple,
    triple_from_roots,
)
from .lorentz import NonGenericSpectrum, inner, random_moebius
from .models import (
    SampledCurve,
    _stencil_size,
    derivatives_from_samples,
    dirac_weyl,
    homogeneous_to_euclidean,
    homogeneous_to_sphere,
    read_csv,
    sphere_to_homogeneous,
    write_csv,
)
from .verification import SuiteConfig, report_dict, run_suite

log = logging.getLogger("moebius_curves")

EXIT_OK, EXIT_IO, EXIT_MATH, EXIT_PARTIAL = 0, 1, 2, 3
FD_ORDER = 6
_LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class CLIError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


@dataclass(frozen=True)
class RunConfig:
    command: str
    in_path: Path | None
    out_dir: Path
    fmt: str
    n: int
    triple: tuple | None
    roots: tuple | None
    s_range: tuple | None
    step: float | None
    tol_algebra: float
    tol_ode: float
    seed: int
    perturb: float
    motion_seed: int | None
    fd_accuracy: int
    vertex_tol: float
    target: str | None

    @classmethod
    def from_args(cls, a: argparse.Namespace) -> "RunConfig":
        if a.step is not None and a.step <= 0:
            raise CLIError("--step must be positive", EXIT_IO)
        if a.n is not None and a.n < 2:
            raise CLIError("--n must be at least 2", EXIT_IO)
        if a.command == "geodesic" and (a.triple is None) == (a.roots is None):
            raise CLIError("give exactly one of --triple or --roots", EXIT_IO)
        if a.command in ("invariants", "convert", "twist") and a.in_path is None:
            raise CLIError(f"{a.command} needs --in PATH", EXIT_IO)
        return cls(
            command=a.command,
            in_path=Path(a.in_path) if a.in_path else None,
            out_dir=Path(a.out),
            fmt=a.format,
            n=a.n if a.n is not None else 4,
            triple=tuple(a.triple) if a.triple else None,
            roots=tuple(a.roots) if a.roots else None,
            s_range=tuple(a.range) if a.range else None,
            step=a.step,
            tol_algebra=a.tol_algebra,
            tol_ode=a.tol_ode,
            seed=a.seed,
            perturb=a.perturb,
            motion_seed=a.motion_seed,
            fd_accuracy=a.fd_accuracy,
            vertex_tol=a.vertex_tol,
            target=a.to,
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CLIError(f"{self.prog}: error: {message}", EXIT_IO)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="moebius", description="Conformal geometry of curves and conformal geodesics.")
    p.add_argument("command", choices=["geodesic", "invariants", "convert", "twist", "verify"])
    g = p.add_mutually_exclusive_group()
    g.add_argument("--roots", nargs=3, type=float, metavar=("XI_MINUS", "XI1", "XI2"))
    g.add_argument("--triple", nargs=3, type=float, metavar=("C1", "C2", "C3"))
    p.add_argument("--range", nargs=2, type=float, metavar=("SMIN", "SMAX"))
    p.add_argument("--step", type=float)
    p.add_argument("--n", type=int, help="ambient sphere dimension (geodesic: pad Q4 into Q_n)")
    p.add_argument("--in", dest="in_path", metavar="PATH")
    p.add_argument("--out", default=".", metavar="DIR")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--to", choices=["euclidean", "sphere", "moebius"], help="convert target")
    p.add_argument("--tol-algebra", type=float, default=1e-9)
    p.add_argument("--tol-ode", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb", type=float, default=0.0)
    p.add_argument("--motion-seed", type=int)
    p.add_argument("--fd-accuracy", type=int, default=8, help="finite-difference accuracy order for sampled input")
    p.add_argument("--vertex-tol", type=float, default=1e-6)
    return p


def _configure_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("MOEBIUS_LOG", "quiet").lower(), logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n", encoding="utf-8")


def _emit(cfg: RunConfig, stem: str, header: list[str], columns: list) -> Path:
    if cfg.fmt == "json":
        path = cfg.out_dir / f"{stem}.json"
        _write_json(path, {h: np.asarray(c, dtype=float).tolist() for h, c in zip(header, columns)})
    else:
        path = cfg.out_dir / f"{stem}.csv"
        write_csv(path, header, columns)
    return path


def _read_sampled(cfg: RunConfig) -> SampledCurve:
    try:
        return read_csv(cfg.in_path)
    except (OSError, ValueError, IndexError) as exc:
        raise CLIError(f"cannot read {cfg.in_path}: {exc}", EXIT_IO) from exc


# ---------------------------------------------------------------------------
# commands


def cmd_geodesic(cfg: RunConfig) -> int:
    try:
        if cfg.roots is not None:
            t = triple_from_roots(*cfg.roots)
        else:
            t = admissible(*cfg.triple)
        g = build_geodesic(t)
    except InadmissibleTriple as exc:
        case = exc.case
        if case is None and cfg.triple is not None and cfg.triple[1] != 0:
            case, _ = classify_triple(*cfg.triple)
        msg = f"inadmissible input: {exc}"
        if case:
            msg += f" [case ({case})]"
        raise CLIError(msg, EXIT_MATH) from exc
    except NonGenericSpectrum as exc:
        raise CLIError(f"inadmissible input: {exc}", EXIT_MATH) from exc
    sol = g.curvatures
    s_min, s_max = cfg.s_range if cfg.s_range else (0.0, 2 * sol.period)
    if not s_max > s_min:
        raise CLIError("--range must satisfy SMIN < SMAX", EXIT_IO)
    step = cfg.step if cfg.step else sol.period / 100
    s = s_min + step * np.arange(int(np.floor((s_max - s_min) / step + 1e-9)) + 1)
    v = g.e0(s)
    light = g.lightlike_residual(s)
    if cfg.n > 4:
        v = np.concatenate([v[:, :-1], np.zeros((s.size, cfg.n - 4)), v[:, -1:]], axis=1)
        G = random_moebius(cfg.motion_seed, cfg.n) if cfg.motion_seed is not None else None
        if G is not None:
            v = v @ G.matrix.T
    elif cfg.n < 4:
        raise CLIError("closed-form geodesics live in Q_4; use --n >= 4", EXIT_MATH)
    v = v / (v[:, :1] + v[:, -1:])
    m = v.shape[1]
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _emit(cfg, "geodesic", ["s"] + [f"e0_{i}" for i in range(m)], [s] + list(v.T))
    _emit(cfg, "geodesic_chart", ["s"] + [f"x{i}" for i in range(1, m - 1)],
          [s] + list(homogeneous_to_euclidean(v).T))
    _emit(cfg, "curvatures", ["s", "mu1", "mu2", "mu3"], [s, sol.mu1(s), sol.mu2(s), sol.mu3(s)])
    energy = float(np.max(sol.energy_residual(s)))
    report = {
        "C1": t.C1, "C2": t.C2, "C3": t.C3,
        "roots": list(t.roots),
        "lambda": g.lam, "tau1": g.tau1, "tau2": g.tau2,
        "period": sol.period,
        "energy_residual": energy,
        "lightlike_residual": float(np.max(light)),
        "checks": {"energy": energy <= cfg.tol_algebra, "lightlike": float(np.max(light)) <= cfg.tol_algebra},
        "samples": int(s.size),
        "n": cfg.n,
    }
    _write_json(cfg.out_dir / "report.json", report)
    print(json.dumps({k: report[k] for k in ("C1", "C2", "C3", "lambda", "tau1", "tau2", "period")}))
    return EXIT_OK


def _intervals(mask: np.ndarray, x: np.ndarray) -> list:
    out, i = [], 0
    while i < mask.size:
        if mask[i]:
            j = i
            while j + 1 < mask.size and mask[j + 1]:
                j += 1
            out.append([float(x[i]), float(x[j])])
            i = j + 1
        else:
            i += 1
    return out


def cmd_invariants(cfg: RunConfig) -> int:
    sc = _read_sampled(cfg)
    try:
        c = derivatives_from_samples(sc, FD_ORDER, cfg.fd_accuracy)
    except ValueError as exc:
        raise CLIError(f"cannot differentiate samples: {exc}", EXIT_MATH) from exc
    # drop samples whose stencils would be one-sided
    half = 0 if sc.closed else _stencil_size(FD_ORDER, cfg.fd_accuracy) // 2
    ts = sc.ts[:-1] if sc.closed else sc.ts[half:sc.ts.size - half]
    if ts.size < 2:
        raise CLIError("too few samples after trimming the boundary", EXIT_MATH)
    try:
        d = reduce_frames(c, ts, extra=0, vertex_tol=cfg.vertex_tol)
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_MATH) from exc
    n = d.n
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    vertex = d.genericity_order < 1
    s = d.s_grid
    _emit(cfg, "conformal_invariants", ["t", "s"] + [f"mu{j}" for j in range(1, n)] + ["density"],
          [ts, s] + list(d.mus) + [d.density])
    if sc.ambient == "euclidean" and n >= 2:
        e = euclidean_frenet(c, ts, order=min(FD_ORDER, c.max_order))
        taus = [f"tau{j}" for j in range(2, n)]
        _emit(cfg, "euclidean_invariants", ["t", "se", "k"] + taus + ["k_prime", "density_ratio"],
              [ts, e.se_grid, e.k] + list(e.taus) + [e.k_prime, np.sqrt(e.Z_norm)])
    gen = {
        "n": n,
        "samples": int(ts.size),
        "trimmed_per_end": half,
        "vertex_count": int(vertex.sum()),
        "generic_intervals_t": _intervals(~vertex, ts),
        "generic_intervals_s": _intervals(~vertex, s),
        "genericity_order_min": int(d.genericity_order.min()),
        "tolerances": {k: float(v) for k, v in d.tolerances.items()} | {"fd_accuracy": cfg.fd_accuracy},
    }
    _write_json(cfg.out_dir / "genericity.json", gen)
    if vertex.any():
        log.warning("%d of %d samples are vertices; invariants there are NaN", vertex.sum(), ts.size)
        print(f"warning: {int(vertex.sum())} of {ts.size} samples are vertices", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_convert(cfg: RunConfig) -> int:
    sc = _read_sampled(cfg)
    target = cfg.target or "moebius"
    pts = sc.points
    try:
        if sc.ambient == "euclidean":
            v = dirac_weyl(pts)
        elif sc.ambient == "sphere":
            v = sphere_to_homogeneous(pts)
        else:
            v = pts
        bad = np.abs(inner(v, v)) > cfg.tol_algebra * np.sum(v * v, axis=-1) * 1e3
        if np.any(bad):
            raise CLIError("input points are not on the light cone / sphere", EXIT_MATH)
        if target == "moebius":
            out = v / (v[:, :1] + v[:, -1:])
            header = [f"e0_{i}" for i in range(out.shape[1])]
        elif target == "sphere":
            out = homogeneous_to_sphere(v)
            header = [f"p{i}" for i in range(out.shape[1])]
        else:
            out = homogeneous_to_euclidean(v)
            header = [f"x{i}" for i in range(1, out.shape[1] + 1)]
    except ValueError as exc:
        raise CLIError(f"conversion failed: {exc}", EXIT_MATH) from exc
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    first = "t"
    path = _emit(cfg, f"converted_{target}", [first] + header, [sc.ts] + list(out.T))
    print(str(path))
    return EXIT_OK


def cmd_twist(cfg: RunConfig) -> int:
    from .euclidean import total_twist

    sc = _read_sampled(cfg)
    if not sc.closed:
        raise CLIError("total twist needs a closed curve (last row must repeat the first)", EXIT_MATH)
    pts = sc.points
    if sc.ambient != "euclidean":
        pts = homogeneous_to_euclidean(sphere_to_homogeneous(pts) if sc.ambient == "sphere" else pts)
    if pts.shape[1] != 3:
        raise CLIError("total twist is defined for curves in R^3", EXIT_MATH)
    if cfg.motion_seed is not None:
        G = random_moebius(cfg.motion_seed, 3, scale=0.3)
        try:
            pts = homogeneous_to_euclidean(dirac_weyl(pts) @ G.matrix.T)
        except ValueError as exc:
            raise CLIError(f"motion sends the curve through infinity: {exc}", EXIT_MATH) from exc
        pts[-1] = pts[0]
    try:
        c = derivatives_from_samples(SampledCurve(sc.ts, pts, "euclidean", True), 5, cfg.fd_accuracy)
        tw = total_twist(c, num=sc.ts.size - 1)
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_MATH) from exc
    result = {"twist_mod_1": tw.value, "raw": tw.raw, "distance_to_integer": tw.distance_to_integer}
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(cfg.out_dir / "twist.json", result)
    print(f"{tw.value:.12f} {tw.distance_to_integer:.3e}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    sc = SuiteConfig(seed=cfg.seed, perturb=cfg.perturb, tol_algebra=cfg.tol_algebra, tol_ode=cfg.tol_ode)
    results = run_suite(sc)
    report = report_dict(sc, results)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(cfg.out_dir / "verify_report.json", report)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}")
    return EXIT_OK if report["passed"] else EXIT_IO


COMMANDS = {
    "geodesic": cmd_geodesic,
    "invariants": cmd_invariants,
    "convert": cmd_convert,
    "twist": cmd_twist,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    _configure_logging()
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig.from_args(args)
        return COMMANDS[cfg.command](cfg)
    except CLIError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
