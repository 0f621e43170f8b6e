"""Euclidean and anisotropic shape operators on charts and meshes; the functionals F and F0.

Sign conventions: S = -dN, so the unit sphere with exterior normal has S = -Id,
and the anisotropic operator is A = D^2 phi(N) o S = -d(eta o N).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._linalg import tangent_basis
from .mesh import face_geometry, is_closed, k_ring, vertex_areas
from .surfaces import IMMERSION_TOL, DegenerateChart, ParametrizedSurface


@dataclass
class CurvatureSample:
    """Batched per-point curvature data; 2x2 matrices are in the chart basis (Xu, Xv)."""

    u: np.ndarray
    v: np.ndarray
    point: np.ndarray
    N: np.ndarray
    S: np.ndarray
    A: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    H: np.ndarray
    K: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    sigma_norm: np.ndarray
    aniso_norm: np.ndarray
    S_opnorm: np.ndarray
    A_opnorm: np.ndarray
    eig_imag: np.ndarray

    def rows(self):
        cols = (self.u, self.v, self.point[..., 0], self.point[..., 1], self.point[..., 2],
                self.H, self.K, self.lambda1, self.lambda2, self.sigma_norm)
        return np.stack([np.ravel(c) for c in cols], axis=-1)


CSV_HEADER = "u,v,x,y,z,H,K,lambda1,lambda2,sigma_norm"


def _frame(surface, u, v):
    X, Xu, Xv, Xuu, Xuv, Xvv = surface.evaluate(u, v)
    c = np.cross(Xu, Xv)
    nc = np.linalg.norm(c, axis=-1)
    if np.any(nc <= IMMERSION_TOL):
        raise DegenerateChart(f"{surface.name}: degenerate metric")
    N = surface.orientation * c / nc[..., None]
    J = np.stack([Xu, Xv], axis=-1)  # (..., 3, 2)
    G = np.einsum("...ia,...ib->...ab", J, J)
    return X, J, G, N, (Xuu, Xuv, Xvv), c, nc


def euclid_shape_operator(surface: ParametrizedSurface, u, v):
    """S = g^{-1} II in the chart basis, II_ab = <X_ab, N>."""
    _, _, G, N, (Xuu, Xuv, Xvv), _, _ = _frame(surface, u, v)
    return _shape_from_frame(G, N, Xuu, Xuv, Xvv)


def _shape_from_frame(G, N, Xuu, Xuv, Xvv):
    e = np.einsum("...i,...i->...", Xuu, N)
    f = np.einsum("...i,...i->...", Xuv, N)
    g = np.einsum("...i,...i->...", Xvv, N)
    II = np.stack([np.stack([e, f], -1), np.stack([f, g], -1)], -2)
    return np.linalg.solve(G, II)


def _eig2(M):
    """Eigenvalues of batched 2x2 matrices, sorted by real part, plus max |imag|."""
    w = np.linalg.eigvals(M)
    imag = np.max(np.abs(w.imag), axis=-1)
    w = np.sort(w.real, axis=-1)
    return w[..., 0], w[..., 1], imag


def aniso_shape_operator(F, surface: ParametrizedSurface, u, v) -> CurvatureSample:
    X, J, G, N, (Xuu, Xuv, Xvv), _, _ = _frame(surface, u, v)
    S = _shape_from_frame(G, N, Xuu, Xuv, Xvv)
    D = F.hess(N)
    M = np.einsum("...ia,...ij,...jb->...ab", J, D, J)
    A = np.linalg.solve(G, M @ S)
    l1, l2, imag = _eig2(A)
    k1, k2, _ = _eig2(S)
    # operator norms in an orthonormal tangent frame
    e1, e2 = tangent_basis(N)
    E = np.stack([e1, e2], axis=-1)
    T = np.einsum("...ia,...ib->...ab", E, J)  # chart basis -> frame coordinates
    Tinv = np.linalg.inv(T)
    S_o = T @ S @ Tinv
    D_o = np.einsum("...ia,...ij,...jb->...ab", E, D, E)
    A_o = D_o @ S_o
    return CurvatureSample(
        u=np.asarray(u, float), v=np.asarray(v, float), point=X, N=N, S=S, A=A,
        lambda1=l1, lambda2=l2, H=np.trace(A, axis1=-2, axis2=-1),
        K=np.linalg.det(S), kappa1=k1, kappa2=k2,
        sigma_norm=np.hypot(k1, k2), aniso_norm=np.hypot(l1, l2),
        S_opnorm=np.linalg.norm(S_o, ord=2, axis=(-2, -1)),
        A_opnorm=np.linalg.norm(A_o, ord=2, axis=(-2, -1)),
        eig_imag=imag,
    )


def aniso_H_ambient(F, surface: ParametrizedSurface, u, v):
    """H = trace(D^2 phi(N) . S~) with S~ = -dN extended by zero along N.

    dN comes from differentiating the normalized cross product directly, so this
    route shares no code with the second-fundamental-form route.
    """
    _, J, G, N, (Xuu, Xuv, Xvv), c, nc = _frame(surface, u, v)
    Xu, Xv = J[..., 0], J[..., 1]
    P = np.eye(3) - np.einsum("...i,...j->...ij", N, N)
    cu = np.cross(Xuu, Xv) + np.cross(Xu, Xuv)
    cv = np.cross(Xuv, Xv) + np.cross(Xu, Xvv)
    s = surface.orientation / nc[..., None]
    Nu = s * np.einsum("...ij,...j->...i", P, cu)
    Nv = s * np.einsum("...ij,...j->...i", P, cv)
    dN = np.stack([Nu, Nv], axis=-1)  # (..., 3, 2)
    Ginv_Jt = np.linalg.solve(G, np.swapaxes(J, -1, -2))
    S_amb = -dN @ Ginv_Jt
    return np.trace(F.hess(N) @ S_amb, axis1=-2, axis2=-1)


# ---------------------------------------------------------------- meshes

@dataclass
class MeshCurvature:
    H: np.ndarray
    S: np.ndarray          # (n, 2, 2) in the vertex frame (e1, e2)
    A: np.ndarray
    valid: np.ndarray      # False where fewer than MIN_NEIGHBORS were usable
    frames: tuple


MIN_NEIGHBORS = 5


def fit_shape_operators(vertices, triangles, normals, rings=2):
    """Per-vertex Weingarten map by a quadratic fit over the k-ring in the tangent frame.

    The height model z = 1/2 (a x^2 + 2 b xy + c y^2) is fit jointly to the
    neighbor heights and to the tangential normal differences, which the same
    quadratic predicts as -(n_j - n_i)_t = [[a, b], [b, c]] (x, y).  The vertex
    normal is trusted, so no linear terms are fit.  Returns [[a, b], [b, c]],
    the matrix of S in the orthonormal frame (e1, e2).
    """
    nbrs = k_ring(len(vertices), triangles, rings)
    e1, e2 = tangent_basis(normals)
    S = np.zeros((len(vertices), 2, 2))
    valid = np.ones(len(vertices), bool)
    for i, nb in enumerate(nbrs):
        nb = nb[normals[nb] @ normals[i] > 0.1]
        if len(nb) < MIN_NEIGHBORS:
            valid[i] = False
            continue
        d = vertices[nb] - vertices[i]
        x, y, z = d @ e1[i], d @ e2[i], d @ normals[i]
        r = np.hypot(x, y)
        tx, ty = normals[nb] @ e1[i], normals[nb] @ e2[i]
        zero = np.zeros_like(x)
        # rows scaled to curvature units: heights by 1/r^2, normal differences by 1/r
        rows = np.concatenate([
            np.stack([0.5 * x ** 2, x * y, 0.5 * y ** 2], -1) / r[:, None] ** 2,
            np.stack([x, y, zero], -1) / r[:, None],
            np.stack([zero, x, y], -1) / r[:, None],
        ])
        rhs = np.concatenate([z / r ** 2, -tx / r, -ty / r])
        (a, b, c), *_ = np.linalg.lstsq(rows, rhs, rcond=None)
        S[i] = [[a, b], [b, c]]
    return S, valid, (e1, e2)


def aniso_H_mesh(F, vertices, triangles, normals, rings=2) -> MeshCurvature:
    normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
    S, valid, (e1, e2) = fit_shape_operators(vertices, triangles, normals, rings)
    E = np.stack([e1, e2], axis=-1)
    D = np.einsum("...ia,...ij,...jb->...ab", E, F.hess(normals), E)
    A = D @ S
    H = np.trace(A, axis1=-2, axis2=-1)
    return MeshCurvature(H, S, A, valid, (e1, e2))


def scale_mesh(vertices, normals, c):
    if c == 0:
        raise ValueError("homothety ratio must be nonzero")
    return c * vertices, normals.copy()


# ---------------------------------------------------------------- functionals

@dataclass
class FunctionalValue:
    area_term: float
    volume_term: float
    H0: float
    total: float

    def to_dict(self):
        return {"area_term": self.area_term, "volume_term": self.volume_term,
                "H0": self.H0, "total": self.total}


def functional_F(F, vertices, triangles) -> float:
    """Midpoint quadrature of the integral of F(N) over a triangle mesh."""
    area, normal, _ = face_geometry(vertices, triangles)
    return float(np.sum(area * F.phi(normal)))


def functional_F0(F, vertices, triangles, H0) -> FunctionalValue:
    area, normal, centroid = face_geometry(vertices, triangles)
    if H0 != 0 and not is_closed(triangles):
        raise ValueError("volume term needs a closed mesh when H0 != 0")
    a = float(np.sum(area * F.phi(normal)))
    vol = float(np.sum(area * np.einsum("ij,ij->i", centroid, normal)) / 3.0)
    return FunctionalValue(a, vol, float(H0), a + H0 * vol)


def harmonic_field(directions, rng, degree=2):
    """Random polynomial of degree <= ``degree`` in the direction coordinates, scaled to max |phi| = 1."""
    p = directions
    feats = [np.ones(len(p))]
    if degree >= 1:
        feats += [p[:, 0], p[:, 1], p[:, 2]]
    if degree >= 2:
        feats += [p[:, 0] * p[:, 1], p[:, 1] * p[:, 2], p[:, 0] * p[:, 2],
                  p[:, 0] ** 2 - p[:, 1] ** 2, 2 * p[:, 2] ** 2 - p[:, 0] ** 2 - p[:, 1] ** 2]
    coef = rng.normal(size=len(feats))
    phi = np.stack(feats, axis=-1) @ coef
    return phi / np.max(np.abs(phi))


def numeric_variation(F, vertices, triangles, normals, phi, H0, t=1e-5):
    """Central difference of F0 under x -> x + t phi N."""
    disp = phi[:, None] * normals
    fp = functional_F0(F, vertices + t * disp, triangles, H0).total
    fm = functional_F0(F, vertices - t * disp, triangles, H0).total
    return (fp - fm) / (2 * t)


def curvature_pairing(F, vertices, triangles, normals, phi, H0, curv=None):
    """Integral of (H - H0) phi over the mesh with barycentric vertex areas."""
    if curv is None:
        curv = aniso_H_mesh(F, vertices, triangles, normals)
    w = vertex_areas(vertices, triangles) * curv.valid
    return float(np.sum(w * (curv.H - H0) * phi))


@lru_cache(maxsize=1)
def variation_sign(level=4) -> float:
    """Sign s with dF0 = s * int (H - H0) phi, calibrated on the unit sphere, F = 1, phi = 1."""
    from .anisotropy import AnisotropyFunction
    from .mesh import icosphere

    F = AnisotropyFunction.constant()
    V, T = icosphere(level)
    phi = np.ones(len(V))
    num = numeric_variation(F, V, T, V, phi, 0.0)
    pair = curvature_pairing(F, V, T, V, phi, 0.0)
    return float(np.sign(num / pair))


@dataclass
class VariationCheck:
    numeric: float
    pairing: float
    sign: float

    @property
    def discrepancy(self):
        return abs(self.numeric - self.sign * self.pairing)


def first_variation_check(F, vertices, triangles, normals, phi, H0, t=1e-5) -> VariationCheck:
    if not is_closed(triangles):
        raise ValueError("first variation check needs a closed mesh")
    return VariationCheck(numeric_variation(F, vertices, triangles, normals, phi, H0, t),
                          curvature_pairing(F, vertices, triangles, normals, phi, H0),
                          variation_sign())
