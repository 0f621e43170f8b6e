"""Anisotropy functions F on the unit sphere.

Every F is handled through its one-homogeneous extension ``phi(x) = |x| F(x/|x|)``.
The ambient gradient of ``phi`` at a unit vector is the Wulff map ``eta``; its
ambient Hessian annihilates the radial direction and, restricted to the tangent
plane, is the ellipticity form ``Hess_S2 F + F g``.

All derivative methods accept batched input of shape ``(..., 3)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._linalg import DomainError, as_unit, sym3, tangent_basis
from .mesh import icosphere

ELLIPTICITY_TOL = 1e-9
KINDS = ("constant", "ellipsoid", "perturbed")


def _quadric_derivs(x, Q, order):
    """phi = sqrt(x^T Q x) and its derivatives up to ``order``."""
    Qx = x @ Q
    phi = np.sqrt(np.einsum("...i,...i->...", x, Qx))
    out = [phi]
    if order >= 1:
        out.append(Qx / phi[..., None])
    if order >= 2:
        out.append(Q / phi[..., None, None]
                   - np.einsum("...i,...j->...ij", Qx, Qx) / phi[..., None, None] ** 3)
    if order >= 3:
        Qb = np.broadcast_to(Q, x.shape[:-1] + (3, 3))
        out.append(-sym3(Qb, Qx) / phi[..., None, None, None] ** 3
                   + 3 * np.einsum("...i,...j,...k->...ijk", Qx, Qx, Qx)
                   / phi[..., None, None, None] ** 5)
    return out


def _bump_derivs(x, a, k, order):
    """g = s^k r^(1-k) with s = <x, a>, r = |x|; derivatives up to ``order``."""
    r = np.linalg.norm(x, axis=-1)
    s = x @ a
    m = 1 - k
    sk = s ** k
    h = r ** m
    out = [sk * h]
    if order == 0:
        return out
    f1 = k * s ** (k - 1)
    h1 = m * r ** (m - 2)
    out.append(f1[..., None] * h[..., None] * a + (sk * h1)[..., None] * x)
    if order == 1:
        return out
    f2 = k * (k - 1) * s ** (k - 2) if k >= 2 else np.zeros_like(s)
    h2b = m * (m - 2) * r ** (m - 4)
    I = np.eye(3)
    aa = np.outer(a, a)
    ax = np.einsum("i,...j->...ij", a, x)
    xx = np.einsum("...i,...j->...ij", x, x)
    hess_h = h1[..., None, None] * I + h2b[..., None, None] * xx
    out.append((f2 * h)[..., None, None] * aa
               + (f1 * h1)[..., None, None] * (ax + np.swapaxes(ax, -1, -2))
               + sk[..., None, None] * hess_h)
    if order == 2:
        return out
    f3 = k * (k - 1) * (k - 2) * s ** (k - 3) if k >= 3 else np.zeros_like(s)
    h3b = m * (m - 2) * (m - 4) * r ** (m - 6)
    aaa = np.einsum("i,j,k->ijk", a, a, a)
    aab = np.broadcast_to(aa, x.shape[:-1] + (3, 3))
    Ib = np.broadcast_to(I, x.shape[:-1] + (3, 3))
    third_h = h2b[..., None, None, None] * sym3(Ib, x) \
        + h3b[..., None, None, None] * np.einsum("...i,...j,...k->...ijk", x, x, x)
    ab = np.broadcast_to(a, x.shape)
    out.append((f3 * h)[..., None, None, None] * aaa
               + (f2 * h1)[..., None, None, None] * sym3(aab, x)
               + f1[..., None, None, None] * sym3(hess_h, ab)
               + sk[..., None, None, None] * third_h)
    return out


@dataclass(frozen=True)
class AnisotropyFunction:
    """Builtin anisotropy catalog.

    ``constant``: F = 1.  ``ellipsoid``: F(n) = sqrt(n^T Q n) with Q symmetric
    positive definite.  ``perturbed``: F(n) = 1 + epsilon <n, axis>^power
    (power 3 by default, which makes the Wulff shape non-centrally-symmetric).
    """

    kind: str = "constant"
    q: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    epsilon: float = 0.0
    axis: tuple = (0.0, 0.0, 1.0)
    power: int = 3
    name: str = ""
    _Q: np.ndarray = field(init=False, repr=False, compare=False)
    _a: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown anisotropy kind {self.kind!r}; expected one of {KINDS}")
        Q = np.array(self.q, dtype=float)
        if Q.shape != (3, 3) or not np.allclose(Q, Q.T, atol=0):
            raise ValueError("q must be a symmetric 3x3 matrix")
        if self.kind == "ellipsoid" and np.linalg.eigvalsh(Q).min() <= 0:
            raise ValueError("ellipsoid parameter Q must be positive definite")
        a = np.array(self.axis, dtype=float)
        a = a / np.linalg.norm(a)
        if self.kind == "perturbed" and self.power < 2:
            raise ValueError("perturbation power must be >= 2")
        Q.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "_Q", Q if self.kind == "ellipsoid" else np.eye(3))
        object.__setattr__(self, "_a", a)
        if not self.name:
            object.__setattr__(self, "name", self._default_name())

    def _default_name(self):
        if self.kind == "constant":
            return "constant"
        if self.kind == "ellipsoid":
            return "ellipsoid(" + ",".join(f"{v:g}" for v in np.diag(self._Q)) + ")"
        return f"perturbed(eps={self.epsilon:g},p={self.power})"

    @classmethod
    def constant(cls):
        return cls("constant")

    @classmethod
    def ellipsoid(cls, Q, name=""):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim == 1:
            Q = np.diag(Q)
        return cls("ellipsoid", q=tuple(map(tuple, Q)), name=name)

    @classmethod
    def perturbed(cls, epsilon, axis=(0.0, 0.0, 1.0), power=3, name=""):
        return cls("perturbed", epsilon=float(epsilon), axis=tuple(float(v) for v in axis),
                   power=int(power), name=name)

    @property
    def Q(self):
        return self._Q

    def derivatives(self, x, order=2):
        """[phi, grad phi, Hess phi, D^3 phi][: order + 1] at points ``x`` (any nonzero, batched)."""
        x = np.asarray(x, dtype=float)
        out = _quadric_derivs(x, self._Q, order)
        if self.kind == "perturbed" and self.epsilon != 0.0:
            bump = _bump_derivs(x, self._a, self.power, order)
            out = [o + self.epsilon * b for o, b in zip(out, bump)]
        return out

    def phi(self, x):
        return self.derivatives(x, 0)[0]

    def grad(self, x):
        return self.derivatives(x, 1)[1]

    def hess(self, x):
        return self.derivatives(x, 2)[2]

    def third(self, x):
        return self.derivatives(x, 3)[3]

    def to_dict(self):
        d = {"kind": self.kind, "name": self.name}
        if self.kind == "ellipsoid":
            Q = self._Q
            d["q"] = [Q[0, 0], Q[1, 1], Q[2, 2], Q[0, 1], Q[0, 2], Q[1, 2]]
        if self.kind == "perturbed":
            d.update(epsilon=self.epsilon, axis=list(self._a), power=self.power)
        return d


def eval_F(F: AnisotropyFunction, n):
    return F.phi(as_unit(n))


def eval_eta(F: AnisotropyFunction, n):
    """Wulff map eta(n) = grad_S2 F(n) + F(n) n, read off as the ambient gradient of phi."""
    return F.grad(as_unit(n))


def eval_tangential_hessian(F: AnisotropyFunction, n):
    """D^2 phi(n): symmetric, kills n, equals Hess_S2 F + F g on n-perp."""
    return F.hess(as_unit(n))


def tangent_eigenvalues(F: AnisotropyFunction, n):
    """Ascending eigenvalues of D^2 phi(n) restricted to n-perp, batched."""
    n = as_unit(n)
    e1, e2 = tangent_basis(n)
    E = np.stack([e1, e2], axis=-1)
    D = np.einsum("...ia,...ij,...jb->...ab", E, F.hess(n), E)
    return np.linalg.eigvalsh(D)


@dataclass
class EllipticityReport:
    min_eigenvalue: float
    argmin_direction: np.ndarray
    sample_count: int
    passed: bool
    tolerance: float = ELLIPTICITY_TOL


def check_ellipticity(F: AnisotropyFunction, subdivision_level: int = 4) -> EllipticityReport:
    """Minimum tangential-Hessian eigenvalue over icosphere directions."""
    if subdivision_level < 0:
        raise ValueError("subdivision_level must be >= 0")
    dirs, _ = icosphere(subdivision_level)
    lam = tangent_eigenvalues(F, dirs)[:, 0]
    i = int(np.argmin(lam))
    return EllipticityReport(float(lam[i]), dirs[i].copy(), len(dirs),
                             bool(lam[i] > ELLIPTICITY_TOL))


def require_elliptic(F: AnisotropyFunction, subdivision_level: int = 4) -> EllipticityReport:
    rep = check_ellipticity(F, subdivision_level)
    if not rep.passed:
        raise DomainError(
            f"anisotropy {F.name} is not elliptic: min eigenvalue {rep.min_eigenvalue:.3e} "
            f"at direction {np.round(rep.argmin_direction, 6).tolist()}")
    return rep


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def verify_derivatives(F: AnisotropyFunction, trials: int = 100, seed: int = 0,
                       step: float = 1e-5) -> float:
    """Worst relative discrepancy between analytic and central-difference derivatives of phi.

    Checks the gradient, Hessian and third derivative at ``trials`` random unit directions.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    n = rng.normal(size=(trials, 3))
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    phi, g, H, T = F.derivatives(n, 3)
    worst = 0.0
    I = np.eye(3)
    for j in range(3):
        xp, xm = n + step * I[j], n - step * I[j]
        dp, dm = F.derivatives(xp, 2), F.derivatives(xm, 2)
        worst = max(worst, _rel((dp[0] - dm[0]) / (2 * step), g[:, j]))
        worst = max(worst, _rel((dp[1] - dm[1]) / (2 * step), H[:, :, j]))
        worst = max(worst, _rel((dp[2] - dm[2]) / (2 * step), T[:, :, :, j]))
    return worst
