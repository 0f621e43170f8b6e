import numpy as np
import pytest
from hypothesis import given, strategies as st

from camc.anisotropy import AnisotropyFunction
from camc.curvature import (CSV_HEADER, aniso_H_ambient, aniso_H_mesh, aniso_shape_operator,
                            euclid_shape_operator, first_variation_check, functional_F,
                            functional_F0, harmonic_field, numeric_variation, scale_mesh,
                            variation_sign)
from camc.mesh import icosphere, vertex_areas
from camc.surfaces import (DegenerateChart, ParametrizedSurface, cylinder_chart, ellipsoid_chart,
                           plane_chart, polynomial_graph, scale_surface, sphere_chart, torus_chart,
                           wulff_chart)
from camc.wulff import build_cylinder, build_wulff_mesh, wulff_curvature_range

from conftest import CATALOG, CONSTANT, ELLIPSOID, PERTURBED, TILTED

E3 = np.array([0.0, 0.0, 1.0])
POLY = polynomial_graph({(2, 0): 0.4, (1, 1): -0.3, (0, 2): 0.2, (3, 0): 0.1, (1, 2): -0.2,
                         (1, 0): 0.3})


def charts(F):
    return [plane_chart(), sphere_chart(), sphere_chart(exterior=False), torus_chart(),
            ellipsoid_chart(), POLY, wulff_chart(F), wulff_chart(F, exterior=False),
            cylinder_chart(F, E3, 2.0)]


def sample(chart, n, seed=0):
    return chart.sample(n, np.random.default_rng(seed))


# ---------------------------------------------------------------- Euclidean shape operator

def test_plane_shape_operator_is_zero():
    u, v = sample(plane_chart(), 20)
    np.testing.assert_allclose(euclid_shape_operator(plane_chart(), u, v), 0.0, atol=1e-15)


def test_exterior_sphere_is_minus_identity():
    ch = sphere_chart()
    u, v = sample(ch, 50)
    S = euclid_shape_operator(ch, u, v)
    np.testing.assert_allclose(S, np.broadcast_to(-np.eye(2), S.shape), atol=1e-12)


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
def test_cylinder_radius_r(r):
    ch = scale_surface(cylinder_chart(CONSTANT, E3, 2.0), r)
    u, v = sample(ch, 30)
    w = np.sort(np.linalg.eigvals(euclid_shape_operator(ch, u, v)).real, axis=-1)
    np.testing.assert_allclose(w[:, 0], -1 / r, atol=1e-12)
    np.testing.assert_allclose(w[:, 1], 0.0, atol=1e-12)


@pytest.mark.parametrize("chart", [torus_chart(), ellipsoid_chart(), POLY, cylinder_chart(TILTED, E3)],
                         ids=lambda c: c.name)
def test_shape_operator_matches_fd_of_normal(chart):
    """S = -dN checked by differencing the unit normal along the chart."""
    u, v = sample(chart, 20, seed=3)
    h = 1e-6
    S = euclid_shape_operator(chart, u, v)
    X, Xu, Xv, *_ = chart.chart(u, v)
    Nu = (chart.normal(u + h, v) - chart.normal(u - h, v)) / (2 * h)
    Nv = (chart.normal(u, v + h) - chart.normal(u, v - h)) / (2 * h)
    # -dN(X_a) = sum_b S_ba X_b
    np.testing.assert_allclose(-Nu, S[:, 0, 0, None] * Xu + S[:, 1, 0, None] * Xv, atol=1e-7)
    np.testing.assert_allclose(-Nv, S[:, 0, 1, None] * Xu + S[:, 1, 1, None] * Xv, atol=1e-7)


def test_degenerate_chart_is_rejected():
    def chart(u, v):
        z = np.zeros(np.shape(u) + (3,))
        X = np.stack([u, np.zeros_like(u), np.zeros_like(u)], -1)
        Xu = np.broadcast_to([1.0, 0.0, 0.0], X.shape)
        return X, Xu, Xu, z, z, z
    bad = ParametrizedSurface(chart, 1, ((0, 1), (0, 1)), "degenerate")
    with pytest.raises(DegenerateChart):
        euclid_shape_operator(bad, np.array([0.5]), np.array([0.5]))
    with pytest.raises(DegenerateChart):
        aniso_shape_operator(ELLIPSOID, bad, np.array([0.5]), np.array([0.5]))


# ---------------------------------------------------------------- anisotropic operator

def test_plane_has_zero_anisotropic_curvature(aniso):
    u, v = sample(plane_chart(), 20)
    cs = aniso_shape_operator(aniso, plane_chart(), u, v)
    np.testing.assert_allclose(cs.A, 0.0, atol=1e-15)
    np.testing.assert_allclose(cs.H, 0.0, atol=1e-15)


@pytest.mark.parametrize("pole", [E3, np.array([1.0, 0.0, 0.0])])
def test_wulff_chart_A_is_minus_identity(aniso, pole):
    ch = wulff_chart(aniso, pole=pole)
    cs = aniso_shape_operator(aniso, ch, *sample(ch, 200))
    np.testing.assert_allclose(cs.A, np.broadcast_to(-np.eye(2), cs.A.shape), atol=1e-8)
    np.testing.assert_allclose(cs.H, -2.0, atol=1e-8)


def test_constant_F_gives_A_equal_S():
    for ch in charts(CONSTANT):
        cs = aniso_shape_operator(CONSTANT, ch, *sample(ch, 50))
        np.testing.assert_allclose(cs.A, cs.S, atol=1e-12)


def test_constant_F_H_is_twice_classical_mean_curvature():
    # torus: classical principal curvatures -1/r and -cos(p)/(R + r cos p) for the exterior normal
    R, r = 2.0, 0.7
    ch = torus_chart(R, r)
    t, p = sample(ch, 300)
    cs = aniso_shape_operator(CONSTANT, ch, t, p)
    mean = 0.5 * (-1 / r - np.cos(p) / (R + r * np.cos(p)))
    np.testing.assert_allclose(cs.H, 2 * mean, atol=1e-10)
    np.testing.assert_allclose(cs.K, np.cos(p) / (r * (R + r * np.cos(p))), atol=1e-10)
    # graph: 2 x mean curvature = div(grad u / W)
    x, y = sample(POLY, 300)
    cs = aniso_shape_operator(CONSTANT, POLY, x, y)
    h = 1e-5

    def flux(x, y):
        _, Xu, Xv, *_ = POLY.chart(x, y)
        p, q = Xu[..., 2], Xv[..., 2]
        W = np.sqrt(1 + p ** 2 + q ** 2)
        return p / W, q / W
    div = ((flux(x + h, y)[0] - flux(x - h, y)[0]) + (flux(x, y + h)[1] - flux(x, y - h)[1])) / (2 * h)
    np.testing.assert_allclose(cs.H, div, atol=1e-7)


@pytest.mark.parametrize("F", CATALOG, ids=lambda F: F.name)
def test_two_H_routes_agree(F):
    for ch in charts(F):
        u, v = sample(ch, 100, seed=5)
        np.testing.assert_allclose(aniso_shape_operator(F, ch, u, v).H, aniso_H_ambient(F, ch, u, v),
                                   atol=1e-10)


def test_sample_invariants(aniso):
    for ch in charts(aniso):
        cs = aniso_shape_operator(aniso, ch, *sample(ch, 100, seed=9))
        np.testing.assert_allclose(np.trace(cs.A, axis1=1, axis2=2), cs.H, atol=1e-14)
        np.testing.assert_allclose(cs.lambda1 + cs.lambda2, cs.H, atol=1e-9)
        np.testing.assert_allclose(np.linalg.det(cs.S), cs.K, atol=1e-14)
        np.testing.assert_allclose(cs.kappa1 * cs.kappa2, cs.K, atol=1e-9)
        assert np.all(cs.lambda1 <= cs.lambda2)
        np.testing.assert_allclose(cs.sigma_norm, np.hypot(cs.kappa1, cs.kappa2))


def test_eigenvalues_real_on_ten_thousand_samples():
    rng = np.random.default_rng(11)
    worst = 0.0
    count = 0
    for F in CATALOG:
        for ch in charts(F):
            u, v = ch.sample(300, rng)
            worst = max(worst, aniso_shape_operator(F, ch, u, v).eig_imag.max())
            count += 300
    assert count >= 10_000
    assert worst < 1e-10


@pytest.mark.parametrize("c", [0.5, 2.0, 5.0, -1.0, -3.0])
def test_homothety_law(aniso, c):
    for ch in charts(aniso):
        u, v = sample(ch, 60, seed=2)
        H = aniso_shape_operator(aniso, ch, u, v).H
        Hc = aniso_shape_operator(aniso, scale_surface(ch, c), u, v)
        np.testing.assert_allclose(Hc.H * c - H, 0.0, atol=1e-10)
        # same normal assignment; argmin/argmax are preserved up to the sign of c
        np.testing.assert_allclose(Hc.N, aniso_shape_operator(aniso, ch, u, v).N, atol=1e-14)


def test_homothety_examples():
    ch = wulff_chart(ELLIPSOID)
    u, v = sample(ch, 100)
    np.testing.assert_allclose(aniso_shape_operator(ELLIPSOID, scale_surface(ch, 2.0), u, v).H, -1.0,
                               atol=1e-8)
    # -W keeps the normal n of W, which is the interior normal of -W
    anti = aniso_shape_operator(PERTURBED, scale_surface(wulff_chart(PERTURBED), -1.0), u, v)
    np.testing.assert_allclose(anti.H, 2.0, atol=1e-8)
    assert np.all(np.einsum("ij,ij->i", anti.N, anti.point) < 0)
    cyl = scale_surface(build_cylinder(TILTED, E3).chart, 3.0)
    np.testing.assert_allclose(aniso_shape_operator(TILTED, cyl, *sample(cyl, 100)).H, -1 / 3,
                               atol=1e-10)
    with pytest.raises(ValueError):
        scale_surface(ch, 0.0)
    with pytest.raises(ValueError):
        scale_mesh(np.eye(3), np.eye(3), 0)


def test_norm_equivalence_pointwise(aniso):
    m, M = wulff_curvature_range(aniso)
    rng = np.random.default_rng(0)
    for ch in charts(aniso):
        cs = aniso_shape_operator(aniso, ch, *ch.sample(300, rng))
        # tangential eigenvalues of D^2 phi lie in [1/M, 1/m]
        assert np.all(cs.A_opnorm <= cs.S_opnorm / m + 1e-9)
        assert np.all(cs.S_opnorm <= cs.A_opnorm * M + 1e-9)


def test_csv_rows(tmp_path):
    ch = wulff_chart(ELLIPSOID)
    cs = aniso_shape_operator(ELLIPSOID, ch, *sample(ch, 5))
    rows = cs.rows()
    assert rows.shape == (5, len(CSV_HEADER.split(",")))
    np.testing.assert_allclose(rows[:, 5], cs.H)


# ---------------------------------------------------------------- meshes

def test_mesh_H_unit_sphere_level4():
    V, T = icosphere(4)
    mc = aniso_H_mesh(CONSTANT, V, T, V)
    assert mc.valid.all()
    assert abs(mc.H.mean() + 2) <= 5e-3
    assert np.max(np.abs(mc.H + 2)) <= 5e-2


def test_mesh_H_ellipsoid_wulff():
    W = build_wulff_mesh(ELLIPSOID, 4)
    mc = aniso_H_mesh(ELLIPSOID, W.vertices, W.triangles, W.source_normals)
    assert abs(mc.H[mc.valid].mean() + 2) <= 5e-3
    assert np.max(np.abs(mc.H[mc.valid] + 2)) <= 5e-2


def test_mesh_H_converges_like_h_squared():
    errs = []
    for level in (2, 3, 4):
        V, T = icosphere(level)
        errs.append(abs(aniso_H_mesh(CONSTANT, V, T, V).H.mean() + 2))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 3.0)


def _planar_patch(n=9, tilt=(0.3, -0.2)):
    x, y = np.meshgrid(np.linspace(-1, 1, n), np.linspace(-1, 1, n), indexing="ij")
    z = tilt[0] * x + tilt[1] * y
    V = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    idx = np.arange(n * n).reshape(n, n)
    a, b, c, d = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel(), idx[:-1, 1:].ravel(), idx[1:, 1:].ravel()
    T = np.concatenate([np.column_stack([a, b, d]), np.column_stack([a, d, c])])
    N = np.tile(np.array([-tilt[0], -tilt[1], 1.0]) / np.sqrt(1 + tilt[0] ** 2 + tilt[1] ** 2),
                (len(V), 1))
    return V, T, N


def test_mesh_H_planar_patch(aniso):
    V, T, N = _planar_patch()
    mc = aniso_H_mesh(aniso, V, T, N)
    assert mc.valid.any()
    assert np.max(np.abs(mc.H[mc.valid])) <= 1e-8


def test_mesh_flags_sparse_vertices():
    V, T, N = _planar_patch(n=3)
    mc = aniso_H_mesh(CONSTANT, V, T, N, rings=1)
    # corner vertices of a 3x3 grid have fewer than five neighbors
    assert not mc.valid[0]
    assert mc.valid[4]


def test_mesh_homothety():
    W = build_wulff_mesh(PERTURBED, 3)
    mc = aniso_H_mesh(PERTURBED, W.vertices, W.triangles, W.source_normals)
    V2, N2 = scale_mesh(W.vertices, W.source_normals, 2.0)
    mc2 = aniso_H_mesh(PERTURBED, V2, W.triangles, N2)
    np.testing.assert_allclose(mc2.H * 2, mc.H, atol=1e-10)


# ---------------------------------------------------------------- functionals

@pytest.mark.xfail(strict=True, reason="inscribed level-4 icosphere: area deficit 1.19e-3, "
                   "volume deficit 2.16e-3 relative; flat midpoint quadrature cannot reach 1e-3")
def test_functional_on_unit_sphere_level4():
    V, T = icosphere(4)
    fv = functional_F0(CONSTANT, V, T, -2.0)
    assert fv.area_term == pytest.approx(4 * np.pi, rel=1e-3)
    assert fv.volume_term == pytest.approx(4 * np.pi / 3, rel=1e-3)


def test_functional_on_unit_sphere():
    V, T = icosphere(5)
    fv = functional_F0(CONSTANT, V, T, -2.0)
    assert fv.area_term == pytest.approx(4 * np.pi, rel=1e-3)
    assert fv.volume_term == pytest.approx(4 * np.pi / 3, rel=1e-3)
    assert fv.total == fv.area_term + fv.H0 * fv.volume_term
    assert set(fv.to_dict()) == {"area_term", "volume_term", "H0", "total"}
    assert functional_F(CONSTANT, V, T) == fv.area_term


def test_functional_deficits_shrink_by_four():
    def deficits(level):
        V, T = icosphere(level)
        fv = functional_F0(CONSTANT, V, T, 0.0)
        return 1 - fv.area_term / (4 * np.pi), 1 - fv.volume_term / (4 * np.pi / 3)
    d3, d4, d5 = (np.array(deficits(l)) for l in (3, 4, 5))
    # frozen level-4 values
    np.testing.assert_allclose(d4, [1.19499e-3, 2.16083e-3], rtol=1e-4)
    np.testing.assert_allclose(d3 / d4, 4.0, atol=0.05)
    np.testing.assert_allclose(d4 / d5, 4.0, atol=0.05)


def test_area_term_richardson_ratio():
    a = [functional_F(ELLIPSOID, *(lambda W: (W.vertices, W.triangles))(build_wulff_mesh(ELLIPSOID, l)))
         for l in (2, 3, 4, 5)]
    ratios = [(a[i + 1] - a[i]) / (a[i + 2] - a[i + 1]) for i in range(2)]
    for r in ratios:
        assert r == pytest.approx(4.0, abs=0.3)


def test_open_mesh_volume_term_is_an_error():
    V, T, _ = _planar_patch()
    with pytest.raises(ValueError):
        functional_F0(CONSTANT, V, T, -1.0)
    assert functional_F0(CONSTANT, V, T, 0.0).total > 0


def test_variation_sign_calibration():
    assert variation_sign() == -1.0
    V, T = icosphere(4)
    d = numeric_variation(CONSTANT, V, T, V, np.ones(len(V)), 0.0)
    # area derivative equals s * int H = -(-2)(4 pi)
    assert d == pytest.approx(8 * np.pi, rel=1e-2)


@given(st.integers(0, 2 ** 32 - 1))
def test_harmonic_field_normalized(seed):
    V, _ = icosphere(2)
    phi = harmonic_field(V, np.random.default_rng(seed))
    assert np.max(np.abs(phi)) == pytest.approx(1.0)


@pytest.mark.parametrize("F", [CONSTANT, ELLIPSOID, PERTURBED], ids=lambda F: F.name)
def test_wulff_is_critical(F):
    W = build_wulff_mesh(F, 5)
    area = functional_F(F, W.vertices, W.triangles)
    rng = np.random.default_rng(4)
    for _ in range(2):
        phi = harmonic_field(W.source_normals, rng)
        d = numeric_variation(F, W.vertices, W.triangles, W.source_normals, phi, -2.0)
        assert abs(d) <= 1e-3 * area


def test_scaled_wulff_critical_for_half_H0():
    W = build_wulff_mesh(ELLIPSOID, 5)
    V2 = 2 * W.vertices
    phi = harmonic_field(W.source_normals, np.random.default_rng(8))
    d = numeric_variation(ELLIPSOID, V2, W.triangles, W.source_normals, phi, -1.0)
    assert abs(d) <= 1e-3 * functional_F(ELLIPSOID, V2, W.triangles)


@pytest.mark.parametrize("F,surface,H0", [(ELLIPSOID, "sphere", -1.0), (ELLIPSOID, "wulff", 0.0),
                                          (PERTURBED, "wulff2", -2.0), (CONSTANT, "sphere", 0.0)])
def test_first_variation_matches_curvature_pairing(F, surface, H0):
    V, T = icosphere(5)
    if surface == "sphere":
        X, N = V, V
    else:
        W = build_wulff_mesh(F, 5)
        X, N = W.vertices * (2 if surface == "wulff2" else 1), W.source_normals
    phi = harmonic_field(N, np.random.default_rng(1))
    chk = first_variation_check(F, X, T, N, phi, H0)
    scale = np.sum(vertex_areas(X, T) * np.abs(phi))
    assert chk.sign == -1.0
    assert chk.discrepancy <= 3e-2 * scale
    assert chk.discrepancy <= 3e-2 * abs(chk.numeric)


def test_first_variation_needs_closed_mesh():
    V, T, N = _planar_patch()
    with pytest.raises(ValueError):
        first_variation_check(CONSTANT, V, T, N, np.ones(len(V)), 0.0)
