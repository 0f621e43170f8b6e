"""Gauss-image hemisphere margins for the constructed examples.

Planes and graphs sit in an open hemisphere, cylinders on its boundary, closed
surfaces such as the Wulff shape cover the sphere.

    python3 scripts/hemisphere_demo.py
"""
import argparse
import json

import numpy as np

from camc import graphpde as gp
from camc.analysis import brute_force_margin, hemisphere_classifier
from camc.anisotropy import AnisotropyFunction
from camc.wulff import build_cylinder, build_wulff_mesh


def examples(F):
    yield "plane", np.array([[0.0, 0.0, 1.0]])
    cyl = build_cylinder(F, (0.0, 0.6, 0.8), 2.0, 90)
    yield "cylinder", cyl.profile.normals
    prob = gp.make_problem(F, -2.0, gp.wulff_cap_trace(F, -2.0), n=33)
    sol = gp.solve_dirichlet(prob)
    u = np.where(prob.mask != gp.OUTSIDE, sol.u, 0.0)
    inner = prob.mask == gp.INTERIOR
    p = np.gradient(u, prob.h, axis=0)[inner]
    q = np.gradient(u, prob.h, axis=1)[inner]
    yield "graph cap", gp.graph_normal(p, q)
    yield "wulff shape", build_wulff_mesh(F, 3).source_normals


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", action="store_true", help="print JSON records instead of a table")
    args = ap.parse_args()
    F = AnisotropyFunction.ellipsoid(np.diag([4.0, 1.0, 1.0]))
    records = []
    for name, normals in examples(F):
        v = hemisphere_classifier(normals)
        brute = brute_force_margin(normals, samples=200_000, seed=args.seed)
        records.append({"example": name, "normals": len(normals), **v.to_dict(), "brute_force": brute})
    if args.json:
        print(json.dumps(records, indent=2))
        return
    print(f"{'example':<12} {'normals':>7} {'feasible':>8} {'margin':>12} {'brute force':>12}")
    for r in records:
        print(f"{r['example']:<12} {r['normals']:>7} {str(r['feasible']):>8} "
              f"{r['margin']:>12.3e} {r['brute_force']:>12.3e}")


if __name__ == "__main__":
    main()
