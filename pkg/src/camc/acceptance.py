"""Exit criteria for the toolkit, runnable from pytest and from ``camc check``.

Each criterion returns a :class:`Criterion` with the measured quantities and
the fixed tolerances they were compared against.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import analysis, curvature as cv, graphpde as gp, surfaces as sf, wulff as wf
from .anisotropy import AnisotropyFunction
from .mesh import icosphere


@dataclass
class Criterion:
    key: str
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    notes: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        meas = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"[{status}] {self.key} {self.title}: {meas}"

    def to_dict(self):
        return {"key": self.key, "title": self.title, "passed": self.passed,
                "measured": {k: _jsonable(v) for k, v in self.measured.items()},
                "tolerances": self.tolerances, "notes": self.notes}


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.3e}"
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def builtin_catalog():
    return [
        AnisotropyFunction.constant(),
        AnisotropyFunction.ellipsoid([4.0, 1.0, 1.0]),
        AnisotropyFunction.perturbed(0.1, (1.0, 2.0, 3.0), power=3),
    ]


def _catalog(extra):
    cat = builtin_catalog()
    if extra is not None and extra not in cat:
        cat.append(extra)
    return cat


# ---------------------------------------------------------------- 1

def round_reduction(seed=0, **_):
    F = AnisotropyFunction.constant()
    W = wf.build_wulff_mesh(F, 4)
    norm_err = float(np.max(np.abs(np.linalg.norm(W.vertices, axis=1) - 1.0)))
    chart = sf.wulff_chart(F)
    u, v = chart.sample(500, np.random.default_rng(seed))
    cs = cv.aniso_shape_operator(F, chart, u, v)
    A_err = float(np.max(np.abs(cs.A + np.eye(2))))
    H_err = float(np.max(np.abs(cs.H + 2.0)))
    return Criterion("C1", "round reduction", norm_err <= 1e-12 and A_err <= 1e-8 and H_err <= 1e-8,
                     {"max_norm_error": norm_err, "max_A_plus_I": A_err, "max_H_plus_2": H_err},
                     {"norm": 1e-12, "A": 1e-8, "H": 1e-8})


# ---------------------------------------------------------------- 2

def ellipsoid_wulff(**_):
    F = AnisotropyFunction.ellipsoid([4.0, 1.0, 1.0])
    W = wf.build_wulff_mesh(F, 4)
    x, y, z = W.vertices.T
    eq_err = float(np.max(np.abs(x ** 2 / 4 + y ** 2 + z ** 2 - 1)))
    dw = wf.wulff_diameter(F, 4)
    pw = wf.pairwise_diameter(W.vertices)
    rel = abs(dw - 4.0) / 4.0
    agree = abs(dw - pw) / dw
    return Criterion("C2", "ellipsoid Wulff shape", eq_err <= 1e-8 and rel <= 1e-3 and agree <= 1e-3,
                     {"max_equation_error": eq_err, "d_W": dw, "d_W_pairwise": pw,
                      "rel_error_vs_4": rel, "route_disagreement": agree},
                     {"equation": 1e-8, "d_W_rel": 1e-3, "routes_rel": 1e-3})


# ---------------------------------------------------------------- 3

def cylinder_camc(seed=0, anisotropy=None, **_):
    rng = np.random.default_rng(seed)
    worst_H, worst_N = 0.0, 0.0
    per = {}
    for F in _catalog(anisotropy):
        for v0 in ([0.0, 0.0, 1.0], [1 / 3, 2 / 3, 2 / 3]):
            cyl = wf.build_cylinder(F, v0, 2.0, 64)
            u, v = cyl.chart.sample(200, rng)
            cs = cv.aniso_shape_operator(F, cyl.chart, u, v)
            h = float(np.max(np.abs(cs.H + 1.0)))
            nv = float(np.max(np.abs(cs.N @ np.asarray(v0))))
            worst_H, worst_N = max(worst_H, h), max(worst_N, nv)
            per[F.name] = max(per.get(F.name, 0.0), h)
    return Criterion("C3", "CAMC cylinders", worst_H <= 1e-8 and worst_N <= 1e-10,
                     {"max_H_plus_1": worst_H, "max_N_dot_v0": worst_N, **{f"H_err[{k}]": x for k, x in per.items()}},
                     {"H": 1e-8, "gauss_image": 1e-10})


# ---------------------------------------------------------------- 4

def _homothety_charts(catalog):
    charts = []
    for F in catalog:
        charts.append((F, sf.wulff_chart(F)))
        charts.append((F, sf.wulff_chart(F, exterior=False)))
        charts.append((F, sf.cylinder_chart(F, [0.0, 0.6, 0.8], 2.0)))
        charts.append((F, sf.torus_chart()))
        charts.append((F, sf.polynomial_graph({(2, 0): 0.7, (1, 1): -0.4, (0, 2): 0.3, (3, 0): 0.2,
                                               (1, 2): -0.5, (0, 1): 0.3})))
    return charts


def homothety_law(seed=0, anisotropy=None, **_):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for F, chart in _homothety_charts(_catalog(anisotropy)):
        u, v = chart.sample(200, rng)
        H = cv.aniso_shape_operator(F, chart, u, v).H
        for c in (0.5, 2.0, 5.0):
            Hc = cv.aniso_shape_operator(F, sf.scale_surface(chart, c), u, v).H
            worst = max(worst, float(np.max(np.abs(Hc * c - H))))
    anti = 0.0
    inward = True
    for F in _catalog(anisotropy):
        chart = sf.scale_surface(sf.wulff_chart(F), -1.0)
        u, v = chart.sample(200, rng)
        cs = cv.aniso_shape_operator(F, chart, u, v)
        anti = max(anti, float(np.max(np.abs(cs.H - 2.0))))
        # the inherited normal must be the interior one on -W (which contains 0 in its interior)
        inward &= bool(np.all(np.einsum("ij,ij->i", cs.N, cs.point) < 0))
    return Criterion("C4", "homothety law", worst <= 1e-10 and anti <= 1e-8 and inward,
                     {"max_cH_minus_H": worst, "antipodal_max_H_minus_2": anti,
                      "antipodal_normal_is_interior": inward},
                     {"law": 1e-10, "antipodal": 1e-8})


# ---------------------------------------------------------------- 5

def _cap_study(F, exact, sizes=(33, 65, 129)):
    errs, iters, resid, ok = [], [], [], []
    for n in sizes:
        prob = gp.make_problem(F, -2.0, exact, n=n, mask="disk", radius=0.5)
        sol = gp.solve_dirichlet(prob)
        X, Y = prob.mesh()
        inner = prob.mask == gp.INTERIOR
        errs.append(float(np.max(np.abs(sol.u[inner] - exact(X[inner], Y[inner])))))
        iters.append(sol.newton_iterations)
        resid.append(sol.residual_norm)
        ok.append(sol.converged)
    orders = [float(np.log2(errs[i] / errs[i + 1])) for i in range(len(errs) - 1)]
    return errs, orders, iters, resid, ok


def pde_recovery(**_):
    sphere = lambda x, y: sf.sphere_cap_fn(1.0)(x, y)[0]
    ell = lambda x, y: sf.quadric_cap_fn((0.25, 1.0))(x, y)[0]
    e1, o1, i1, r1, ok1 = _cap_study(AnisotropyFunction.constant(), sphere)
    e2, o2, i2, r2, ok2 = _cap_study(AnisotropyFunction.ellipsoid([4.0, 1.0, 1.0]), ell)
    passed = (e1[-1] <= 1e-3 and min(o1) >= 1.8 and min(o2) >= 1.8 and all(ok1 + ok2)
              and max(i1 + i2) <= 20 and max(r1 + r2) <= 1e-10)
    return Criterion("C5", "graph PDE recovery", passed,
                     {"sphere_err_129": e1[-1], "sphere_orders": o1, "ellipsoid_err_129": e2[-1],
                      "ellipsoid_orders": o2, "max_newton_iterations": max(i1 + i2),
                      "max_residual": max(r1 + r2)},
                     {"err_129": 1e-3, "order": 1.8, "iterations": 20, "residual": 1e-10})


# ---------------------------------------------------------------- 6

def _quadratic_graph(p, q, uxx, uxy, uyy):
    def fn(x, y):
        return (p * x + q * y + 0.5 * uxx * x ** 2 + uxy * x * y + 0.5 * uyy * y ** 2,
                p + uxx * x + uxy * y, q + uxy * x + uyy * y,
                np.full_like(x, uxx), np.full_like(x, uxy), np.full_like(x, uyy))
    return sf.graph_chart(fn, ((-1.0, 1.0), (-1.0, 1.0)))


def coefficient_equivalence(seed=0, anisotropy=None, **_):
    rng = np.random.default_rng(seed)
    cat = _catalog(anisotropy)
    worst = 0.0
    for k in range(100):
        F = cat[k % len(cat)]
        p, q = rng.uniform(-2, 2, 2)
        uxx, uxy, uyy = rng.normal(size=3)
        a, b, c = gp.assemble_coefficients(F, p, q)
        H_pde = a * uxx + b * uxy + c * uyy
        chart = _quadratic_graph(p, q, uxx, uxy, uyy)
        H_amb = float(cv.aniso_H_ambient(F, chart, np.array([0.0]), np.array([0.0]))[0])
        worst = max(worst, abs(H_pde - H_amb))
    F1 = AnisotropyFunction.constant()
    p, q = rng.uniform(-3, 3, (2, 100))
    W3 = (1 + p ** 2 + q ** 2) ** 1.5
    ref = np.stack([(1 + q ** 2) / W3, -2 * p * q / W3, (1 + p ** 2) / W3], -1)
    round_err = float(np.max(np.abs(gp.assemble_coefficients(F1, p, q) - ref)))
    return Criterion("C6", "coefficient equivalence", worst <= 1e-10 and round_err <= 1e-14,
                     {"max_trace_route_diff": worst, "round_formula_diff": round_err},
                     {"routes": 1e-10, "round_formula": 1e-14})


# ---------------------------------------------------------------- 7

def criticality(seed=0, anisotropy=None, **_):
    rng = np.random.default_rng(seed)
    dirs, tris = icosphere(5)
    worst = 0.0
    per = {}
    for F in _catalog(anisotropy):
        W = wf.build_wulff_mesh(F, 5)
        area = cv.functional_F0(F, W.vertices, tris, -2.0).area_term
        for _ in range(5):
            phi = cv.harmonic_field(dirs, rng)
            d = cv.numeric_variation(F, W.vertices, tris, dirs, phi, -2.0)
            r = abs(d) / abs(area)
            worst = max(worst, r)
            per[F.name] = max(per.get(F.name, 0.0), r)
    return Criterion("C7", "criticality of the Wulff shape", worst <= 1e-3,
                     {"max_rel_derivative": worst, **{f"rel[{k}]": x for k, x in per.items()}},
                     {"rel_to_area": 1e-3})


# ---------------------------------------------------------------- 8

def _norm_charts():
    return [
        sf.torus_chart(),
        sf.torus_chart(1.5, 0.5, exterior=False),
        sf.ellipsoid_chart((2.0, 1.0, 0.5)),
        sf.sphere_chart(0.7, exterior=False),
        sf.polynomial_graph({(2, 0): 1.0, (1, 1): -0.8, (0, 2): -0.6, (3, 0): 0.4, (0, 3): -0.3}),
        sf.polynomial_graph({(2, 1): 1.2, (1, 2): -0.7, (2, 0): 0.2, (1, 0): 0.5}),
    ]


def norm_equivalence(seed=0, anisotropy=None, samples=10_000, **_):
    rng = np.random.default_rng(seed)
    slack = 1e-9
    cat = _catalog(anisotropy)
    charts = _norm_charts()
    violations = 0
    total = 0
    worst = -np.inf
    counts = iter(np.array_split(np.arange(samples), len(cat) * len(charts)))
    for F in cat:
        m_W, M_W = wf.wulff_curvature_range(F, 4)
        # eigenvalue bracket of D^2 phi on tangent planes: reciprocals of the Wulff curvatures
        dmin, dmax = 1.0 / M_W, 1.0 / m_W
        for chart in charts:
            u, v = chart.sample(len(next(counts)), rng)
            cs = cv.aniso_shape_operator(F, chart, u, v)
            checks = [
                cs.A_opnorm - dmax * cs.S_opnorm,
                cs.S_opnorm - cs.A_opnorm / dmin,
                cs.aniso_norm - dmax * cs.sigma_norm,
                cs.sigma_norm - cs.aniso_norm / dmin,
            ]
            for c in checks:
                violations += int(np.sum(c > slack))
                worst = max(worst, float(np.max(c)))
            total += len(u)
    return Criterion("C8", "norm equivalence", violations == 0 and total == samples,
                     {"samples": total, "violations": violations, "max_excess": worst},
                     {"slack": slack})


# ---------------------------------------------------------------- 9

def hemisphere(seed=0, **_):
    rng = np.random.default_rng(seed)
    plane = analysis.hemisphere_classifier([[0.0, 0.0, 1.0]])
    v0 = np.array([1.0, -2.0, 2.0]) / 3.0
    cyl = wf.build_cylinder(AnisotropyFunction.ellipsoid([4.0, 1.0, 1.0]), v0, 2.0, 360)
    cyl_v = analysis.hemisphere_classifier(cyl.profile.normals)
    sph, _ = icosphere(3)
    sph_v = analysis.hemisphere_classifier(sph)
    rand_ok = 0
    for _ in range(1000):
        vstar = rng.normal(size=3)
        vstar /= np.linalg.norm(vstar)
        m = int(rng.integers(1, 60))
        pts = rng.normal(size=(m, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        pts[pts @ vstar <= 0] *= -1
        pts = pts + 1e-3 * vstar  # strictly inside the open hemisphere
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        ver = analysis.hemisphere_classifier(pts)
        rand_ok += int(ver.feasible and ver.margin > 0 and ver.witness @ vstar > 0)
    brute = 0.0
    for m in (4, 17, 60, 200, 500):
        pts = rng.normal(size=(m, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        if m % 2:
            pts[:, 2] = np.abs(pts[:, 2])
        brute = max(brute, abs(analysis.hemisphere_classifier(pts).margin
                               - analysis.brute_force_margin(pts, seed=m)))
    passed = (plane.feasible and abs(plane.margin - 1) <= 1e-12
              and cyl_v.feasible and abs(cyl_v.margin) <= 1e-9 and abs(abs(cyl_v.witness @ v0) - 1) <= 1e-9
              and not sph_v.feasible and sph_v.margin < 0 and rand_ok == 1000 and brute <= 1e-6)
    return Criterion("C9", "hemisphere classifier", passed,
                     {"plane_margin": plane.margin, "cylinder_margin": cyl_v.margin,
                      "cylinder_witness_axis_alignment": abs(float(cyl_v.witness @ v0)),
                      "sphere_margin": sph_v.margin, "random_feasible": rand_ok,
                      "max_brute_force_diff": brute},
                     {"cylinder_margin": 1e-9, "brute_force": 1e-6})


# ---------------------------------------------------------------- 10

def constants(anisotropy=None, **_):
    cat = _catalog(anisotropy)
    worst = 0.0
    combos = 0
    for F in cat:
        for H0 in (-2.0, -1.0, 0.5, 3.0):
            if combos == 10:
                break
            rep = analysis.meeks_constant(F, H0)
            worst = max(worst, abs(rep.d0 - 2 * np.sqrt(3) * rep.d_W / abs(H0)))
            combos += 1
    excess = -np.inf
    for F in cat:
        W = wf.build_wulff_mesh(F, 4)
        dW = wf.wulff_diameter(F, 4)
        for axis in ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [1.0, 1.0, 1.0]):
            axis = np.asarray(axis) / np.linalg.norm(axis)
            h = W.vertices @ axis
            offs = np.linspace(h.min(), h.max(), 13)[1:-1]
            for res in analysis.slice_components_diameter(W.vertices, W.triangles, axis, offs):
                if res.diameters:
                    excess = max(excess, max(res.diameters) - dW)
    return Criterion("C10", "explicit constants", combos == 10 and worst <= 1e-12 and excess <= 2e-2,
                     {"combinations": combos, "max_d0_error": worst, "max_slice_excess": excess},
                     {"d0": 1e-12, "slice_excess": 2e-2})


# ---------------------------------------------------------------- 11

def interior_nonconstancy(seed=0, **_):
    rng = np.random.default_rng(seed)
    F = AnisotropyFunction.ellipsoid([4.0, 1.0, 1.0])
    chart = sf.wulff_chart(F, exterior=False)
    u, v = chart.sample(2000, rng)
    H = cv.aniso_shape_operator(F, chart, u, v).H
    spread = float(H.max() - H.min())
    G = AnisotropyFunction.perturbed(0.1, (1.0, 2.0, 3.0), power=3)
    Hg = cv.aniso_shape_operator(G, sf.wulff_chart(G, exterior=False), u, v).H
    return Criterion("C11", "interior-normal H non-constant on the ellipsoid Wulff shape",
                     spread > 0.1,
                     {"ellipsoid_spread": spread, "ellipsoid_mean_H": float(H.mean()),
                      "perturbed_spread": float(Hg.max() - Hg.min())},
                     {"spread_min": 0.1},
                     "centrally symmetric F gives eta(-n) = -eta(n), hence H = +2 identically")


CRITERIA = [round_reduction, ellipsoid_wulff, cylinder_camc, homothety_law, pde_recovery,
            coefficient_equivalence, criticality, norm_equivalence, hemisphere, constants,
            interior_nonconstancy]


def run_all(seed=0, anisotropy=None, only=None):
    results = []
    for fn in CRITERIA:
        if only and fn.__name__ not in only:
            continue
        results.append(fn(seed=seed, anisotropy=anisotropy))
    return results
