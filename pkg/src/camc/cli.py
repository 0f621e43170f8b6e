"""Command-line front end: ``camc {wulff, cylinder, curvature, solve-graph, check}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import acceptance, analysis, curvature as cv, graphpde as gp, surfaces as sf, wulff as wf
from ._linalg import DomainError
from .anisotropy import AnisotropyFunction, check_ellipticity
from .config import ConfigError, anisotropy_from_dict, problem_from_dict, read_config

log = logging.getLogger("camc")

EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_ELLIPTICITY = 3
EXIT_SOLVER = 4


class CommandError(Exception):
    def __init__(self, kind, message, code, **extra):
        super().__init__(message)
        self.kind, self.code, self.extra = kind, code, extra


def _dump(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _vec(text):
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected x,y,z; got {text!r}") from exc
    if v.shape != (3,) or np.linalg.norm(v) == 0:
        raise argparse.ArgumentTypeError("expected a nonzero 3-vector x,y,z")
    return v / np.linalg.norm(v)


def _anisotropy(args) -> AnisotropyFunction:
    if args.config is None:
        F = AnisotropyFunction.constant()
    else:
        F = anisotropy_from_dict(read_config(args.config))
    rep = check_ellipticity(F, 5)
    if not rep.passed:
        raise CommandError("ellipticity", f"anisotropy {F.name} fails the ellipticity check",
                           EXIT_ELLIPTICITY, min_eigenvalue=rep.min_eigenvalue,
                           direction=rep.argmin_direction.tolist())
    return F


def cmd_wulff(args, out: Path):
    F = _anisotropy(args)
    W = wf.build_wulff_mesh(F, args.level)
    W.write_obj(out / "wulff.obj")
    m, M = wf.wulff_curvature_range(F, args.level)
    d_w = wf.wulff_diameter(F, args.level)
    h0 = -2.0 if args.h0 is None else args.h0
    report = analysis.meeks_constant(F, h0, args.level) if h0 != 0 else None
    summary = {
        "anisotropy": F.to_dict(), "level": args.level, "vertices": len(W.vertices),
        "d_w": d_w, "d_w_pairwise": wf.pairwise_diameter(W.vertices),
        "curvature_min": m, "curvature_max": M,
        "functional": cv.functional_F0(F, W.vertices, W.triangles, h0).to_dict(),
    }
    _dump(out / "wulff.json", summary)
    if report is not None:
        offs = np.linspace(-0.9, 0.9, 7) * np.max(np.abs(W.vertices[:, 2]))
        slices = analysis.slice_components_diameter(W.vertices, W.triangles, [0, 0, 1], offs)
        report.slices = [(s.offset, s.diameters) for s in slices]
        report.hemisphere = analysis.hemisphere_classifier(W.source_normals)
        _dump(out / "analysis.json", report.to_dict())
    print(f"d_w = {d_w:.12g}  curvature range = [{m:.6g}, {M:.6g}]")
    return 0


def cmd_cylinder(args, out: Path):
    F = _anisotropy(args)
    cyl = wf.build_cylinder(F, args.v0, args.height, args.samples)
    cyl.write_obj(out / "cylinder.obj")
    cyl.profile.write_csv(out / "profile.csv")
    T, L = cyl.chart.grid(args.samples, 9)
    cs = cv.aniso_shape_operator(F, cyl.chart, T.ravel(), L.ravel())
    data = np.column_stack([T.ravel(), L.ravel(), cs.point, cs.H])
    np.savetxt(out / "cylinder_H.csv", data, delimiter=",", header="theta,lambda,x,y,z,H",
               comments="", fmt="%.17g")
    err = float(np.max(np.abs(cs.H + 1)))
    _dump(out / "cylinder.json", {"anisotropy": F.to_dict(), "v0": list(map(float, args.v0)),
                                  "height": args.height, "max_H_plus_1": err,
                                  "max_N_dot_v0": float(np.max(np.abs(cs.N @ args.v0)))})
    print(f"chart H = -1 to {err:.3e}")
    return 0


CHARTS = ("wulff", "wulff-interior", "cylinder", "sphere", "torus", "plane", "ellipsoid-surface")


def _chart(name, F, v0):
    return {
        "wulff": lambda: sf.wulff_chart(F),
        "wulff-interior": lambda: sf.wulff_chart(F, exterior=False),
        "cylinder": lambda: sf.cylinder_chart(F, v0, 2.0),
        "sphere": lambda: sf.sphere_chart(),
        "torus": lambda: sf.torus_chart(),
        "plane": lambda: sf.plane_chart(),
        "ellipsoid-surface": lambda: sf.ellipsoid_chart(),
    }[name]()


def cmd_curvature(args, out: Path):
    F = _anisotropy(args)
    chart = _chart(args.chart, F, args.v0)
    u, v = chart.sample(args.samples, np.random.default_rng(args.seed))
    cs = cv.aniso_shape_operator(F, chart, u, v)
    np.savetxt(out / "curvature.csv", cs.rows(), delimiter=",", header=cv.CSV_HEADER,
               comments="", fmt="%.17g")
    print(f"{args.chart}: H in [{cs.H.min():.6g}, {cs.H.max():.6g}] over {len(u)} samples")
    return 0


def _trace(pcfg):
    F, kind = pcfg.anisotropy, pcfg.boundary
    if kind in ("wulff_cap", "sphere_cap", "hemisphere"):
        if kind != "wulff_cap" and F.kind != "constant":
            raise ConfigError("sphere_cap boundary needs the constant anisotropy; use wulff_cap")
        return gp.wulff_cap_trace(F, pcfg.H0), True
    if kind == "constant":
        return gp.constant_trace(pcfg.boundary_value), pcfg.H0 == 0
    raise ConfigError(f"unknown boundary {kind!r}")


def cmd_solve_graph(args, out: Path):
    if args.config is None:
        raise ConfigError("solve-graph needs --config")
    cfg = read_config(args.config)
    pcfg = problem_from_dict(cfg, Path(args.config).parent)
    if args.grid is not None:
        pcfg.n = args.grid
    if args.h0 is not None:
        pcfg.H0 = args.h0
    rep = check_ellipticity(pcfg.anisotropy, 5)
    if not rep.passed:
        raise CommandError("ellipticity", f"anisotropy {pcfg.anisotropy.name} is not elliptic",
                           EXIT_ELLIPTICITY, min_eigenvalue=rep.min_eigenvalue)
    trace, exact_known = _trace(pcfg)
    try:
        prob = gp.make_problem(pcfg.anisotropy, pcfg.H0, trace, pcfg.n, pcfg.mask, pcfg.radius,
                               pcfg.center, pcfg.rect)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sol = gp.solve_dirichlet(prob)
    gp.write_solution_csv(out / "solution.csv", prob, sol)
    gp.write_solution_obj(out / "solution.obj", prob, sol)
    X, Y = prob.mesh()
    inner = prob.mask == gp.INTERIOR
    known = prob.mask != gp.OUTSIDE
    plane = float(np.min(prob.boundary_values[prob.mask == gp.BOUNDARY]))
    report = {
        "anisotropy": pcfg.anisotropy.to_dict(), "n": pcfg.n, "h": prob.h, "H0": pcfg.H0,
        "converged": sol.converged, "message": sol.message,
        "newton_iterations": sol.newton_iterations, "residual_norm": sol.residual_norm,
        "residual_history": sol.history, "min_ellipticity": sol.min_ellipticity,
        "tolerance": gp.NEWTON_TOL,
        "max_height": analysis.graph_height_report(analysis.solution_points(prob, sol),
                                                   (0, 0, 1), plane),
        "reference_plane_z": plane,
    }
    if pcfg.H0 != 0:
        report["d0"] = analysis.separation_constant(wf.wulff_diameter(pcfg.anisotropy), pcfg.H0)
    if exact_known and sol.converged:
        report["max_error_vs_exact"] = float(np.max(np.abs(sol.u[inner] - trace(X[inner], Y[inner]))))
    if sol.converged:
        p = np.gradient(np.where(known, sol.u, 0.0), prob.h, axis=0)[inner]
        q = np.gradient(np.where(known, sol.u, 0.0), prob.h, axis=1)[inner]
        report["hemisphere"] = analysis.hemisphere_classifier(gp.graph_normal(p, q)).to_dict()
    _dump(out / "report.json", report)
    if not sol.converged:
        raise CommandError("solver", sol.message, EXIT_SOLVER, residual_norm=sol.residual_norm,
                           node=sol.failed_node)
    msg = f"converged in {sol.newton_iterations} iterations, residual {sol.residual_norm:.3e}"
    if "max_error_vs_exact" in report:
        msg += f", max error vs exact {report['max_error_vs_exact']:.3e}"
    print(msg)
    return 0


def cmd_check(args, out: Path):
    F = None
    if args.config is not None:
        F = _anisotropy(args)
    results = acceptance.run_all(seed=args.seed, anisotropy=F, only=args.only)
    for r in results:
        print(r.line())
    summary = {"seed": args.seed, "anisotropy": None if F is None else F.to_dict(),
               "passed": all(r.passed for r in results),
               "criteria": [r.to_dict() for r in results]}
    _dump(out / "check.json", summary)
    return 0 if summary["passed"] else EXIT_CHECK_FAILED


COMMANDS = {"wulff": cmd_wulff, "cylinder": cmd_cylinder, "curvature": cmd_curvature,
            "solve-graph": cmd_solve_graph, "check": cmd_check}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="anisotropy (or problem) configuration file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--level", type=int, default=4, help="icosphere subdivision level")
    common.add_argument("--grid", type=int, default=None, help="grid nodes per axis")
    common.add_argument("--h0", type=float, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="camc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("wulff", parents=[common], help="Wulff shape mesh and constants")
    p = sub.add_parser("cylinder", parents=[common], help="CAMC cylinder patch")
    p.add_argument("--v0", type=_vec, default=np.array([0.0, 0.0, 1.0]))
    p.add_argument("--height", type=float, default=2.0)
    p.add_argument("--samples", type=int, default=64)
    p = sub.add_parser("curvature", parents=[common], help="curvature samples on an analytic chart")
    p.add_argument("--chart", choices=CHARTS, default="wulff")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--v0", type=_vec, default=np.array([0.0, 0.0, 1.0]))
    sub.add_parser("solve-graph", parents=[common], help="Dirichlet problem for the CAMC graph equation")
    p = sub.add_parser("check", parents=[common], help="run the acceptance criteria")
    p.add_argument("--only", nargs="*", default=None,
                   help="criterion function names, e.g. pde_recovery hemisphere")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print(f"seed = {args.seed}")
    try:
        return COMMANDS[args.command](args, out)
    except (CommandError, ConfigError, DomainError) as exc:
        if isinstance(exc, CommandError):
            kind, code, extra = exc.kind, exc.code, exc.extra
        elif isinstance(exc, ConfigError):
            kind, code, extra = "config", EXIT_CONFIG, {}
        else:
            kind, code, extra = "domain", EXIT_ELLIPTICITY, {}
        record = {"error": kind, "message": str(exc), "exit_status": code, **extra}
        print(json.dumps(record, default=str), file=sys.stderr)
        _dump(out / "error.json", json.loads(json.dumps(record, default=str)))
        return code


if __name__ == "__main__":
    sys.exit(main())
