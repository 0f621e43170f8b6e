"""Analytic charts with exact first and second derivatives.

A chart returns ``(X, Xu, Xv, Xuu, Xuv, Xvv)`` for arrays of parameters; the
unit normal is ``orientation * (Xu x Xv) / |Xu x Xv|``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from ._linalg import as_unit, tangent_basis

IMMERSION_TOL = 1e-10


class DegenerateChart(ValueError):
    pass


@dataclass(frozen=True)
class ParametrizedSurface:
    chart: Callable
    orientation: int = 1
    domain: tuple = ((0.0, 1.0), (0.0, 1.0))
    name: str = ""

    def evaluate(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        u, v = np.broadcast_arrays(u, v)
        return self.chart(u, v)

    def normal(self, u, v):
        _, Xu, Xv, *_ = self.evaluate(u, v)
        c = np.cross(Xu, Xv)
        nc = np.linalg.norm(c, axis=-1)
        if np.any(nc <= IMMERSION_TOL):
            raise DegenerateChart(f"{self.name}: |Xu x Xv| <= {IMMERSION_TOL}")
        return self.orientation * c / nc[..., None]

    def sample(self, n, rng):
        (u0, u1), (v0, v1) = self.domain
        return rng.uniform(u0, u1, n), rng.uniform(v0, v1, n)

    def grid(self, nu, nv):
        (u0, u1), (v0, v1) = self.domain
        return np.meshgrid(np.linspace(u0, u1, nu), np.linspace(v0, v1, nv), indexing="ij")


def scale_surface(surface: ParametrizedSurface, c: float) -> ParametrizedSurface:
    """Image under x -> c x, keeping the same normal at corresponding points."""
    if c == 0:
        raise ValueError("homothety ratio must be nonzero")

    def chart(u, v, _base=surface.chart):
        return tuple(c * D for D in _base(u, v))

    # Xu x Xv picks up c^2 > 0, so the orientation sign is unchanged
    return replace(surface, chart=chart, name=f"{c:g}*{surface.name}")


def _sph(theta, phi):
    st, ct, sp_, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    n = np.stack([st * cp, st * sp_, ct], axis=-1)
    nt = np.stack([ct * cp, ct * sp_, -st], axis=-1)
    np_ = np.stack([-st * sp_, st * cp, np.zeros_like(st)], axis=-1)
    ntt = -n
    ntp = np.stack([-ct * sp_, ct * cp, np.zeros_like(st)], axis=-1)
    npp = np.stack([-st * cp, -st * sp_, np.zeros_like(st)], axis=-1)
    return n, nt, np_, ntt, ntp, npp


def plane_chart(orientation=1):
    def chart(u, v):
        z = np.zeros_like(u)
        X = np.stack([u, v, z], axis=-1)
        Xu = np.stack([np.ones_like(u), z, z], axis=-1)
        Xv = np.stack([z, np.ones_like(u), z], axis=-1)
        Z = np.zeros_like(X)
        return X, Xu, Xv, Z, Z, Z
    return ParametrizedSurface(chart, orientation, ((-2.0, 2.0), (-2.0, 2.0)), "plane")


def sphere_chart(radius=1.0, exterior=True):
    def chart(t, p):
        return tuple(radius * D for D in _sph(t, p))
    return ParametrizedSurface(chart, 1 if exterior else -1,
                               ((0.05, np.pi - 0.05), (0.0, 2 * np.pi)), "sphere")


def _rotation_to(axis):
    """Rotation matrix whose third column is ``axis`` (the spherical-chart pole)."""
    axis = as_unit(axis)
    e1, e2 = tangent_basis(axis)
    return np.stack([e1, e2, axis], axis=-1)


def wulff_chart(F, exterior=True, pole=(0.0, 0.0, 1.0)):
    """The Wulff shape as n -> eta(n) over spherical coordinates about ``pole``.

    With ``exterior`` the chart normal is n itself.
    """
    R = _rotation_to(pole)

    def chart(t, p):
        n, nt, np_, ntt, ntp, npp = (D @ R.T for D in _sph(t, p))
        _, g, H, T = F.derivatives(n, 3)
        Hv = lambda a: np.einsum("...ij,...j->...i", H, a)
        Tv = lambda a, b: np.einsum("...ijk,...j,...k->...i", T, a, b)
        X = g
        Xu, Xv = Hv(nt), Hv(np_)
        Xuu = Tv(nt, nt) + Hv(ntt)
        Xuv = Tv(nt, np_) + Hv(ntp)
        Xvv = Tv(np_, np_) + Hv(npp)
        return X, Xu, Xv, Xuu, Xuv, Xvv

    return ParametrizedSurface(chart, 1 if exterior else -1,
                               ((0.05, np.pi - 0.05), (0.0, 2 * np.pi)),
                               f"wulff[{F.name}]" + ("" if exterior else "-interior"))


def circle_frame(v0):
    """Orthonormal (e1, e2) of v0-perp with e1 x e2 = v0 (counterclockwise about v0)."""
    return tangent_basis(as_unit(v0))


def cylinder_chart(F, v0, height=np.inf):
    """(theta, lam) -> eta(p(theta)) + lam v0 with p(theta) on the great circle v0-perp."""
    v0 = as_unit(v0)
    e1, e2 = circle_frame(v0)
    half = min(float(height) / 2, 1e6)

    def chart(t, lam):
        c, s = np.cos(t)[..., None], np.sin(t)[..., None]
        p = c * e1 + s * e2
        dp = -s * e1 + c * e2
        _, g, H, T = F.derivatives(p, 3)
        X = g + lam[..., None] * v0
        Xt = np.einsum("...ij,...j->...i", H, dp)
        Xl = np.broadcast_to(v0, X.shape).copy()
        # D^2 phi(p) p = 0, so the p'' = -p term drops out
        Xtt = np.einsum("...ijk,...j,...k->...i", T, dp, dp)
        Z = np.zeros_like(X)
        return X, Xt, Xl, Xtt, Z, Z

    return ParametrizedSurface(chart, 1, ((0.0, 2 * np.pi), (-half, half)),
                               f"cylinder[{F.name}]")


def graph_chart(u_fn, domain, name="graph"):
    """Graph z = u(x, y) with upward normal; ``u_fn`` returns (u, ux, uy, uxx, uxy, uyy)."""
    def chart(x, y):
        u, ux, uy, uxx, uxy, uyy = u_fn(x, y)
        z, o = np.zeros_like(x), np.ones_like(x)
        X = np.stack([x, y, u], axis=-1)
        Xu = np.stack([o, z, ux], axis=-1)
        Xv = np.stack([z, o, uy], axis=-1)
        return (X, Xu, Xv, np.stack([z, z, uxx], axis=-1),
                np.stack([z, z, uxy], axis=-1), np.stack([z, z, uyy], axis=-1))
    return ParametrizedSurface(chart, 1, domain, name)


def torus_chart(R=2.0, r=0.7, exterior=True):
    def chart(t, p):
        ct, st, cp, sp_ = np.cos(t), np.sin(t), np.cos(p), np.sin(p)
        w = R + r * cp
        z = np.zeros_like(t)
        X = np.stack([w * ct, w * st, r * sp_], axis=-1)
        Xt = np.stack([-w * st, w * ct, z], axis=-1)
        Xp = np.stack([-r * sp_ * ct, -r * sp_ * st, r * cp], axis=-1)
        Xtt = np.stack([-w * ct, -w * st, z], axis=-1)
        Xtp = np.stack([r * sp_ * st, -r * sp_ * ct, z], axis=-1)
        Xpp = np.stack([-r * cp * ct, -r * cp * st, -r * sp_], axis=-1)
        return X, Xt, Xp, Xtt, Xtp, Xpp
    # Xt x Xp points outward
    return ParametrizedSurface(chart, 1 if exterior else -1,
                               ((0.0, 2 * np.pi), (0.0, 2 * np.pi)), "torus")


def ellipsoid_chart(semi_axes=(2.0, 1.0, 1.0), exterior=True):
    a = np.asarray(semi_axes, dtype=float)

    def chart(t, p):
        return tuple(a * D for D in _sph(t, p))
    return ParametrizedSurface(chart, 1 if exterior else -1,
                               ((0.05, np.pi - 0.05), (0.0, 2 * np.pi)), "ellipsoid-surface")


def polynomial_graph(coeffs, name="poly-graph", domain=((-1.0, 1.0), (-1.0, 1.0))):
    """Graph of the cubic sum c_ij x^i y^j over i + j <= 3; ``coeffs`` is a dict {(i, j): c}."""
    def u_fn(x, y):
        out = [np.zeros_like(x) for _ in range(6)]
        for (i, j), c in coeffs.items():
            def mono(di, dj):
                if di > i or dj > j:
                    return np.zeros_like(x)
                fi = np.prod(np.arange(i - di + 1, i + 1)) if di else 1
                fj = np.prod(np.arange(j - dj + 1, j + 1)) if dj else 1
                return c * fi * fj * x ** (i - di) * y ** (j - dj)
            for k, (di, dj) in enumerate([(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]):
                out[k] = out[k] + mono(di, dj)
        return tuple(out)
    return graph_chart(u_fn, domain, name)


def sphere_cap_fn(radius=1.0, sign=1.0):
    """z = sign * sqrt(R^2 - x^2 - y^2) with exact derivatives."""
    return quadric_cap_fn((1.0 / radius ** 2, 1.0 / radius ** 2), sign, radius)


def quadric_cap_fn(inv_sq=(1.0, 1.0), sign=1.0, scale=1.0):
    """z = sign * scale * sqrt(1 - A x^2 - B y^2) and its derivatives.

    With ``scale = 1`` and (A, B) = (1/4, 1) this is the cap of x^2/4 + y^2 + z^2 = 1.
    """
    A, B = inv_sq

    def fn(x, y):
        w = np.sqrt(1.0 - A * x ** 2 - B * y ** 2)
        k = sign * scale
        u = k * w
        ux = -k * A * x / w
        uy = -k * B * y / w
        uxx = -k * A * (1 - B * y ** 2) / w ** 3
        uyy = -k * B * (1 - A * x ** 2) / w ** 3
        uxy = -k * A * B * x * y / w ** 3
        return u, ux, uy, uxx, uxy, uyy
    return fn
