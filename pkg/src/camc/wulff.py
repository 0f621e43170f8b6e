"""Wulff shape, equatorial profiles and CAMC cylinders as meshes; convex-geometry constants."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from ._linalg import as_unit, tangent_basis
from .anisotropy import AnisotropyFunction, require_elliptic, tangent_eigenvalues
from .mesh import icosphere, write_obj
from .surfaces import ParametrizedSurface, circle_frame, cylinder_chart


@dataclass
class WulffMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    source_normals: np.ndarray

    def write_obj(self, path):
        return write_obj(path, self.vertices, self.triangles, self.source_normals)


def build_wulff_mesh(F: AnisotropyFunction, subdivision_level: int = 4) -> WulffMesh:
    """Icosphere directions pushed through eta; refuses non-elliptic F."""
    require_elliptic(F)
    dirs, tris = icosphere(subdivision_level)
    return WulffMesh(F.grad(dirs), tris, dirs)


def wulff_diameter(F: AnisotropyFunction, subdivision_level: int = 4, refine=True) -> float:
    """Diameter of the Wulff shape as its maximal width max_u F(u) + F(-u).

    The icosphere maximum is polished by a local search on the sphere.
    """
    require_elliptic(F)
    dirs, _ = icosphere(subdivision_level)
    width = F.phi(dirs) + F.phi(-dirs)
    best = float(width.max())
    if refine:
        best = max(best, -_polish(lambda n: -(F.phi(n) + F.phi(-n)), dirs[np.argmax(width)]))
    return best


def pairwise_diameter(points, chunk=2048) -> float:
    """Brute-force max pairwise distance."""
    points = np.asarray(points, float)
    best = 0.0
    sq = np.einsum("ij,ij->i", points, points)
    for s in range(0, len(points), chunk):
        blk = points[s:s + chunk]
        d2 = sq[s:s + chunk, None] + sq[None, :] - 2 * blk @ points.T
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


def _polish(f, n0):
    """Minimize a scalar function of a unit vector near ``n0`` (tangent-plane chart)."""
    n0 = as_unit(n0)
    e1, e2 = tangent_basis(n0)

    def g(t):
        n = n0 + t[0] * e1 + t[1] * e2
        return float(f(n / np.linalg.norm(n)))

    res = minimize(g, np.zeros(2), method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    return min(float(res.fun), g(np.zeros(2)))


def wulff_curvature_range(F: AnisotropyFunction, subdivision_level: int = 4, refine=True):
    """(m, M): extreme principal curvatures of the Wulff shape.

    At eta(p) the principal curvatures are the reciprocals of the tangential
    eigenvalues of D^2 phi(p).
    """
    require_elliptic(F)
    dirs, _ = icosphere(subdivision_level)
    lam = tangent_eigenvalues(F, dirs)
    lo, hi = float(lam[:, 0].min()), float(lam[:, 1].max())
    if refine:
        lo = min(lo, _polish(lambda n: tangent_eigenvalues(F, n)[0], dirs[np.argmin(lam[:, 0])]))
        hi = max(hi, -_polish(lambda n: -tangent_eigenvalues(F, n)[1], dirs[np.argmax(lam[:, 1])]))
    return 1.0 / hi, 1.0 / lo


@dataclass
class ProfileCurve:
    axis: np.ndarray
    theta: np.ndarray
    points: np.ndarray
    normals: np.ndarray

    def write_csv(self, path):
        data = np.column_stack([self.theta, self.points, self.normals])
        np.savetxt(path, data, delimiter=",", header="theta,x,y,z,px,py,pz",
                   comments="", fmt="%.17g")
        return Path(path)


def profile_curve(F: AnisotropyFunction, v0, n_samples: int = 64) -> ProfileCurve:
    """eta over the great circle v0-perp, counterclockwise about v0."""
    v0 = as_unit(v0)
    if n_samples < 16:
        raise ValueError("n_samples must be >= 16")
    e1, e2 = circle_frame(v0)
    theta = np.linspace(0.0, 2 * np.pi, n_samples, endpoint=False)
    p = np.cos(theta)[:, None] * e1 + np.sin(theta)[:, None] * e2
    return ProfileCurve(v0, theta, F.grad(p), p)


@dataclass
class CylinderPatch:
    profile: ProfileCurve
    height: float
    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray
    chart: ParametrizedSurface

    def write_obj(self, path):
        return write_obj(path, self.vertices, self.triangles, self.normals)


def build_cylinder(F: AnisotropyFunction, v0, height: float = 2.0, n_samples: int = 64,
                   n_layers: int = 16) -> CylinderPatch:
    """Profile extruded along v0 over |lambda| <= height / 2, quad-split into triangles."""
    if height <= 0:
        raise ValueError("height must be positive")
    prof = profile_curve(F, v0, n_samples)
    lam = np.linspace(-height / 2, height / 2, n_layers + 1)
    V = (prof.points[None, :, :] + lam[:, None, None] * prof.axis).reshape(-1, 3)
    Nv = np.broadcast_to(prof.normals, (len(lam),) + prof.normals.shape).reshape(-1, 3).copy()
    n = n_samples
    tris = []
    for k in range(n_layers):
        for j in range(n):
            a, b = k * n + j, k * n + (j + 1) % n
            c, d = a + n, b + n
            # theta increases counterclockwise about v0 and lambda along v0: outward is a, b, d
            tris += [(a, b, d), (a, d, c)]
    return CylinderPatch(prof, float(height), V, np.array(tris, dtype=np.int64), Nv,
                         cylinder_chart(F, prof.axis, height))
