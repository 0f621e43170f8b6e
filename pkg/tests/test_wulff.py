import numpy as np
import pytest

from camc._linalg import DomainError
from camc.anisotropy import AnisotropyFunction
from camc.curvature import aniso_shape_operator, euclid_shape_operator
from camc.mesh import edge_face_counts, enclosed_volume, is_closed, read_obj
from camc.surfaces import ellipsoid_chart, wulff_chart
from camc.wulff import (build_cylinder, build_wulff_mesh, pairwise_diameter, profile_curve,
                        wulff_curvature_range, wulff_diameter)

from conftest import CATALOG, CONSTANT, ELLIPSOID, PERTURBED, random_units

E3 = np.array([0.0, 0.0, 1.0])


def test_constant_wulff_is_unit_sphere():
    W = build_wulff_mesh(CONSTANT, 4)
    assert np.max(np.abs(np.linalg.norm(W.vertices, axis=1) - 1)) <= 1e-12


def test_ellipsoid_wulff_lies_on_the_ellipsoid():
    W = build_wulff_mesh(ELLIPSOID, 4)
    x, y, z = W.vertices.T
    assert np.max(np.abs(x ** 2 / 4 + y ** 2 + z ** 2 - 1)) <= 1e-8


def test_wulff_mesh_invariants(aniso):
    W = build_wulff_mesh(aniso, 3)
    np.testing.assert_allclose(W.vertices, aniso.grad(W.source_normals), atol=1e-12)
    assert is_closed(W.triangles)
    assert np.all(edge_face_counts(W.triangles) == 2)
    assert enclosed_volume(W.vertices, W.triangles) > 0
    # support identity <eta(p), p> = F(p)
    support = np.einsum("ij,ij->i", W.vertices, W.source_normals)
    np.testing.assert_allclose(support, aniso.phi(W.source_normals), atol=1e-10)


def test_wulff_mesh_convexity(aniso):
    W = build_wulff_mesh(aniso, 3)
    P = random_units(np.random.default_rng(1), 400)
    # every vertex lies on the F side of every supporting plane <x, p> = F(p)
    excess = W.vertices @ P.T - aniso.phi(P)[None, :]
    assert excess.max() <= 1e-8


def test_wulff_mesh_refuses_non_elliptic():
    with pytest.raises(DomainError):
        build_wulff_mesh(AnisotropyFunction.perturbed(0.6), 2)


def test_diameter_examples():
    assert wulff_diameter(CONSTANT) == pytest.approx(2.0, abs=1e-12)
    assert wulff_diameter(ELLIPSOID) == pytest.approx(4.0, rel=1e-3)
    eps = 0.1
    d = wulff_diameter(PERTURBED)
    assert 2 - 2 * eps <= d <= 2 + 2 * eps
    # odd perturbations leave every width F(u) + F(-u) equal to 2
    assert d == pytest.approx(2.0, abs=1e-12)


def test_diameter_routes_agree(aniso):
    W = build_wulff_mesh(aniso, 4)
    d_width = wulff_diameter(aniso, 4)
    d_pair = pairwise_diameter(W.vertices)
    assert abs(d_width - d_pair) / d_width <= 1e-3
    # the mesh is inscribed in the body, so the pairwise value cannot exceed the width
    assert d_pair <= d_width + 1e-12


def test_pairwise_diameter_small():
    pts = np.array([[0, 0, 0], [3, 4, 0], [1, 1, 1.0]])
    assert pairwise_diameter(pts) == pytest.approx(5.0)


def test_curvature_range_examples():
    assert wulff_curvature_range(CONSTANT) == pytest.approx((1.0, 1.0), abs=1e-12)
    m, M = wulff_curvature_range(ELLIPSOID)
    # dense sampling of the exact second fundamental form of the (2,1,1) ellipsoid
    chart = ellipsoid_chart((2.0, 1.0, 1.0))
    rng = np.random.default_rng(0)
    u, v = chart.sample(200_000, rng)
    k = np.linalg.eigvals(-euclid_shape_operator(chart, u, v)).real
    assert m == pytest.approx(k.min(), abs=1e-3)
    assert M == pytest.approx(k.max(), abs=1e-3)
    assert (m, M) == pytest.approx((0.25, 2.0), abs=1e-9)


def test_curvature_range_perturbed_frozen():
    # frozen oracle values for the catalog's perturbed sphere
    m, M = wulff_curvature_range(PERTURBED)
    assert 0 < m <= M
    assert m == pytest.approx(0.833333, abs=1e-4)
    assert M == pytest.approx(1.25, abs=1e-4)


def test_curvature_range_ordered(aniso):
    m, M = wulff_curvature_range(aniso, 3)
    assert 0 < m <= M


def test_wulff_chart_has_A_minus_identity(aniso):
    chart = wulff_chart(aniso)
    u, v = chart.sample(300, np.random.default_rng(2))
    cs = aniso_shape_operator(aniso, chart, u, v)
    np.testing.assert_allclose(cs.A, np.broadcast_to(-np.eye(2), cs.A.shape), atol=1e-8)
    np.testing.assert_allclose(cs.H, -2.0, atol=1e-8)
    # the exterior chart normal at eta(n) is n itself
    np.testing.assert_allclose(aniso.grad(cs.N), cs.point, atol=1e-12)


def test_interior_normal_H_nonconstant_for_asymmetric_F():
    # with an odd perturbation the interior-normal H varies over the shape
    chart = wulff_chart(PERTURBED, exterior=False)
    u, v = chart.sample(2000, np.random.default_rng(0))
    H = aniso_shape_operator(PERTURBED, chart, u, v).H
    assert H.max() - H.min() > 0.1


def test_interior_normal_H_of_symmetric_F_is_constant():
    # for centrally symmetric F the interior normal of W is the exterior normal of -W = W
    chart = wulff_chart(ELLIPSOID, exterior=False)
    u, v = chart.sample(2000, np.random.default_rng(0))
    H = aniso_shape_operator(ELLIPSOID, chart, u, v).H
    np.testing.assert_allclose(H, 2.0, atol=1e-8)


# ---------------------------------------------------------------- profiles and cylinders

def test_profile_constant_is_unit_circle():
    prof = profile_curve(CONSTANT, E3, 64)
    np.testing.assert_allclose(np.linalg.norm(prof.points, axis=1), 1.0, atol=1e-14)
    np.testing.assert_allclose(prof.points[:, 2], 0.0, atol=1e-15)


def test_profile_ellipsoid_equator():
    prof = profile_curve(ELLIPSOID, E3, 64)
    x, y, z = prof.points.T
    assert np.max(np.abs(x ** 2 / 4 + y ** 2 - 1)) <= 1e-8
    assert np.max(np.abs(z)) <= 1e-14


@pytest.mark.parametrize("v0", [E3, np.array([1.0, 2.0, -2.0]) / 3])
def test_profile_invariants(aniso, v0):
    prof = profile_curve(aniso, v0, 64)
    assert np.max(np.abs(prof.normals @ v0)) <= 1e-15
    np.testing.assert_allclose(prof.points, aniso.grad(prof.normals), atol=1e-14)
    # normals turn counterclockwise about v0, monotonically
    turn = np.cross(prof.normals, np.roll(prof.normals, -1, axis=0)) @ v0
    assert np.all(turn > 0)
    # projected polyline is convex: consecutive edge cross products share a sign
    P = prof.points - np.outer(prof.points @ v0, v0)
    e = np.roll(P, -1, axis=0) - P
    s = np.cross(e, np.roll(e, -1, axis=0)) @ v0
    assert np.all(s > 0)


def test_profile_needs_enough_samples():
    with pytest.raises(ValueError):
        profile_curve(CONSTANT, E3, 8)


@pytest.mark.parametrize("F", CATALOG, ids=lambda F: F.name)
def test_cylinder_chart_H_and_gauss_image(F):
    v0 = np.array([0.3, -0.4, 0.866])
    v0 /= np.linalg.norm(v0)
    cyl = build_cylinder(F, v0, 2.0, 64)
    u, v = cyl.chart.sample(200, np.random.default_rng(7))
    cs = aniso_shape_operator(F, cyl.chart, u, v)
    np.testing.assert_allclose(cs.H, -1.0, atol=1e-8)
    assert np.max(np.abs(cs.N @ v0)) <= 1e-10
    # the chart normal at (theta, lambda) is p(theta), whatever lambda is
    p = cyl.chart.normal(u, np.zeros_like(u))
    np.testing.assert_allclose(cs.N, p, atol=1e-12)


def test_constant_cylinder_is_round():
    cyl = build_cylinder(CONSTANT, E3, 2.0, 64)
    np.testing.assert_allclose(np.hypot(cyl.vertices[:, 0], cyl.vertices[:, 1]), 1.0, atol=1e-14)
    assert np.abs(cyl.vertices[:, 2]).max() == pytest.approx(1.0)


def test_cylinder_mesh_orientation():
    cyl = build_cylinder(ELLIPSOID, E3, 2.0, 32, 4)
    V, T = cyl.vertices, cyl.triangles
    n = np.cross(V[T[:, 1]] - V[T[:, 0]], V[T[:, 2]] - V[T[:, 0]])
    # triangle normals agree with the stored exterior normals
    assert np.all(np.einsum("ij,ij->i", n, cyl.normals[T[:, 0]]) > 0)


def test_cylinder_height_must_be_positive():
    with pytest.raises(ValueError):
        build_cylinder(CONSTANT, E3, 0.0)


def test_obj_and_csv_export(tmp_path):
    W = build_wulff_mesh(ELLIPSOID, 2)
    path = W.write_obj(tmp_path / "w.obj")
    V, T, N = read_obj(path)
    np.testing.assert_allclose(N, W.source_normals, atol=1e-14)
    np.testing.assert_allclose(V, W.vertices, atol=1e-14)
    np.testing.assert_array_equal(T, W.triangles)
    text = (tmp_path / "w.obj").read_text().splitlines()
    assert any(line.startswith("vn ") for line in text)
    prof = profile_curve(ELLIPSOID, E3, 16)
    prof.write_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "theta,x,y,z,px,py,pz"
    assert len(lines) == 17
