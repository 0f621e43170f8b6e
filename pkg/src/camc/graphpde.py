"""The CAMC graph equation a(p, q) u_xx + b(p, q) u_xy + c(p, q) u_yy = H0 on masked grids.

The coefficients are assembled from the trace formula: in the basis (d_x, d_y)
of the graph, S = C U / W^3 with C = [[1+q^2, -pq], [-pq, 1+p^2]], the Wulff
factor is g^{-1} J^T D^2 phi(N) J = C M / W^2, so

    H = trace(C M C U) / W^5,   M = J^T D^2 phi(N) J,   J = [(1, 0, p), (0, 1, q)].
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .anisotropy import AnisotropyFunction, require_elliptic
from .mesh import write_obj

log = logging.getLogger(__name__)

OUTSIDE, BOUNDARY, INTERIOR = 0, 1, 2
NEWTON_TOL = 1e-10
MAX_ITER = 50


def graph_normal(p, q):
    p, q = np.asarray(p, float), np.asarray(q, float)
    W = np.sqrt(1 + p ** 2 + q ** 2)
    return np.stack([-p, -q, np.ones_like(p)], axis=-1) / W[..., None]


def _C(p, q):
    return np.stack([np.stack([1 + q ** 2, -p * q], -1), np.stack([-p * q, 1 + p ** 2], -1)], -2)


def graph_euclid_weingarten(p, q, uxx, uxy, uyy):
    """Matrix (a_ij) of S = -dN in the basis (d_x, d_y) for the upward normal."""
    p, q = np.asarray(p, float), np.asarray(q, float)
    W = np.sqrt(1 + p ** 2 + q ** 2)
    U = np.stack([np.stack([uxx, uxy], -1), np.stack([uxy, uyy], -1)], -2)
    return _C(p, q) @ U / W[..., None, None] ** 3


def _coefficients(F, p, q, derivatives=False, discriminant=False):
    p, q = np.broadcast_arrays(np.asarray(p, float), np.asarray(q, float))
    W2 = 1 + p ** 2 + q ** 2
    W = np.sqrt(W2)
    n = np.stack([-p, -q, np.ones_like(p)], -1)
    N = n / W[..., None]
    z, o = np.zeros_like(p), np.ones_like(p)
    J = np.stack([np.stack([o, z], -1), np.stack([z, o], -1), np.stack([p, q], -1)], -2)
    ders = F.derivatives(N, 3 if derivatives else 2)
    D = ders[2]
    M = np.swapaxes(J, -1, -2) @ D @ J
    C = _C(p, q)
    W5 = W ** 5
    K = C @ M @ C / W5[..., None, None]
    abc = np.stack([K[..., 0, 0], 2 * K[..., 0, 1], K[..., 1, 1]], -1)
    extra = ()
    if discriminant:
        # 4ac - b^2 = 4 det(K) = 4 det(M) / W^6 since det(C) = W^2; this form avoids the
        # cancellation that the direct expression suffers at steep slopes
        extra = (4 * np.linalg.det(M) / W2 ** 3,)
    if not derivatives:
        return (abc,) + extra if extra else abc
    T = ders[3]
    out = []
    for k, (dC, dJ, dn) in enumerate([
        (np.stack([np.stack([z, -q], -1), np.stack([-q, 2 * p], -1)], -2),
         np.stack([np.stack([z, z], -1), np.stack([z, z], -1), np.stack([o, z], -1)], -2),
         np.stack([-o, z, z], -1)),
        (np.stack([np.stack([2 * q, -p], -1), np.stack([-p, z], -1)], -2),
         np.stack([np.stack([z, z], -1), np.stack([z, z], -1), np.stack([z, o], -1)], -2),
         np.stack([z, -o, z], -1)),
    ]):
        s = p if k == 0 else q
        dN = dn / W[..., None] - n * (s / W ** 3)[..., None]
        dD = np.einsum("...ijk,...k->...ij", T, dN)
        dM = (np.swapaxes(dJ, -1, -2) @ D @ J + np.swapaxes(J, -1, -2) @ D @ dJ
              + np.swapaxes(J, -1, -2) @ dD @ J)
        dK = ((dC @ M @ C + C @ dM @ C + C @ M @ dC) / W5[..., None, None]
              - (5 * s / W2)[..., None, None] * K)
        out.append(np.stack([dK[..., 0, 0], 2 * dK[..., 0, 1], dK[..., 1, 1]], -1))
    return (abc, out[0], out[1]) + extra


def assemble_coefficients(F: AnisotropyFunction, p, q):
    """(a, b, c) with H = a u_xx + b u_xy + c u_yy at slope (p, q); batched, last axis = (a, b, c)."""
    abc, disc = _coefficients(F, p, q, discriminant=True)
    if np.any(disc <= 0):
        raise ValueError(f"anisotropy {F.name} gives a non-elliptic graph operator")
    return abc


def coefficient_derivatives(F: AnisotropyFunction, p, q):
    """((a, b, c), d/dp (a, b, c), d/dq (a, b, c)), exact via the third derivative of phi."""
    return _coefficients(F, p, q, derivatives=True)


# ---------------------------------------------------------------- problems

@dataclass
class GraphProblem:
    x: np.ndarray               # node coordinates along the first grid axis
    y: np.ndarray
    mask: np.ndarray            # OUTSIDE / BOUNDARY / INTERIOR per node
    boundary_values: np.ndarray  # NaN except at boundary nodes
    H0: float
    F: AnisotropyFunction
    description: str = ""

    @property
    def h(self):
        return float(self.x[1] - self.x[0])

    @property
    def shape(self):
        return self.mask.shape

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def validate(self):
        inner = self.mask == INTERIOR
        if inner[0].any() or inner[-1].any() or inner[:, 0].any() or inner[:, -1].any():
            raise ValueError("interior nodes may not touch the grid edge")
        known = self.mask != OUTSIDE
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if not np.all(np.roll(np.roll(known, -di, 0), -dj, 1)[inner]):
                    raise ValueError("an interior node has an unlabeled stencil neighbor")
        if not np.all(np.isfinite(self.boundary_values[self.mask == BOUNDARY])):
            raise ValueError("boundary values must be finite")


def _label(interior):
    """Boundary = non-interior nodes in the 8-neighborhood of an interior node (the cross stencil needs diagonals)."""
    near = np.zeros_like(interior)
    pad = np.pad(interior, 1)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            near |= pad[1 + di:pad.shape[0] - 1 + di, 1 + dj:pad.shape[1] - 1 + dj]
    mask = np.full(interior.shape, OUTSIDE, dtype=np.int8)
    mask[near] = BOUNDARY
    mask[interior] = INTERIOR
    return mask


def make_problem(F, H0, trace, n=65, mask="disk", radius=0.5, center=(0.0, 0.0),
                 rect=(-0.5, 0.5, -0.5, 0.5)) -> GraphProblem:
    """Problem on an ``n x n`` node grid; ``trace(x, y)`` supplies the Dirichlet data."""
    if mask == "disk":
        cx, cy = center
        x = np.linspace(cx - radius, cx + radius, n)
        y = np.linspace(cy - radius, cy + radius, n)
        X, Y = np.meshgrid(x, y, indexing="ij")
        h = x[1] - x[0]
        # keep interior nodes a hair inside the circle so no boundary node sits on it
        interior = (X - cx) ** 2 + (Y - cy) ** 2 < (radius - 1e-9 * h) ** 2
    elif mask == "rectangle":
        x0, x1, y0, y1 = rect
        x = np.linspace(x0, x1, n)
        y = np.linspace(y0, y1, n)
        X, Y = np.meshgrid(x, y, indexing="ij")
        interior = np.zeros(X.shape, bool)
        interior[1:-1, 1:-1] = True
    else:
        raise ValueError(f"unknown mask {mask!r}")
    labels = _label(interior)
    bv = np.full(X.shape, np.nan)
    b = labels == BOUNDARY
    bv[b] = trace(X[b], Y[b])
    prob = GraphProblem(x, y, labels, bv, float(H0), F, f"{mask} n={n}")
    prob.validate()
    return prob


# ---------------------------------------------------------------- discrete operator

def _derivs(u, h):
    """Central differences on the inner grid [1:-1, 1:-1]."""
    c = u[1:-1, 1:-1]
    E, Wst = u[2:, 1:-1], u[:-2, 1:-1]
    Nn, Ss = u[1:-1, 2:], u[1:-1, :-2]
    p = (E - Wst) / (2 * h)
    q = (Nn - Ss) / (2 * h)
    uxx = (E - 2 * c + Wst) / h ** 2
    uyy = (Nn - 2 * c + Ss) / h ** 2
    uxy = (u[2:, 2:] - u[:-2, 2:] - u[2:, :-2] + u[:-2, :-2]) / (4 * h ** 2)
    return p, q, uxx, uxy, uyy


def camc_residual(problem: GraphProblem, u) -> np.ndarray:
    """a u_xx + b u_xy + c u_yy - H0 at interior nodes (NaN elsewhere)."""
    u = np.asarray(u, float)
    inner = problem.mask[1:-1, 1:-1] == INTERIOR
    p, q, uxx, uxy, uyy = (d[inner] for d in _derivs(np.nan_to_num(u), problem.h))
    abc = _coefficients(problem.F, p, q)
    res = np.full(problem.shape, np.nan)
    res[1:-1, 1:-1][inner] = abc[:, 0] * uxx + abc[:, 1] * uxy + abc[:, 2] * uyy - problem.H0
    return res


_STENCIL = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (-1, 1), (1, -1)]


def _jacobian(problem, u, index):
    h = problem.h
    inner = problem.mask[1:-1, 1:-1] == INTERIOR
    p, q, uxx, uxy, uyy = (d[inner] for d in _derivs(u, h))
    abc, dp, dq, disc = _coefficients(problem.F, p, q, derivatives=True, discriminant=True)
    a, b, c = abc.T
    res = a * uxx + b * uxy + c * uyy - problem.H0
    alpha_p = dp[:, 0] * uxx + dp[:, 1] * uxy + dp[:, 2] * uyy
    alpha_q = dq[:, 0] * uxx + dq[:, 1] * uxy + dq[:, 2] * uyy
    weights = [
        -2 * (a + c) / h ** 2,
        a / h ** 2 + alpha_p / (2 * h), a / h ** 2 - alpha_p / (2 * h),
        c / h ** 2 + alpha_q / (2 * h), c / h ** 2 - alpha_q / (2 * h),
        b / (4 * h ** 2), b / (4 * h ** 2), -b / (4 * h ** 2), -b / (4 * h ** 2),
    ]
    I, Jn = np.nonzero(problem.mask == INTERIOR)
    rows = index[I, Jn]
    R, C, V = [], [], []
    for (di, dj), w in zip(_STENCIL, weights):
        col = index[I + di, Jn + dj]
        keep = col >= 0
        R.append(rows[keep]); C.append(col[keep]); V.append(w[keep])
    n = int(index.max()) + 1
    Jm = sp.csr_matrix((np.concatenate(V), (np.concatenate(R), np.concatenate(C))), shape=(n, n))
    # the equation times W^3 has the same roots but does not reward steepening, so it
    # serves as the line-search merit
    merit = float(np.max(np.abs(res * (1 + p ** 2 + q ** 2) ** 1.5))) if len(res) else 0.0
    return Jm, res, disc, merit


def harmonic_extension(problem: GraphProblem) -> np.ndarray:
    """Discrete-harmonic (5-point) extension of the boundary data."""
    index, I, Jn = _index(problem)
    h2 = problem.h ** 2
    n = len(I)
    rows, cols, vals = [np.arange(n)], [np.arange(n)], [np.full(n, -4.0 / h2)]
    rhs = np.zeros(n)
    for di, dj in _STENCIL[1:5]:
        ni, nj = I + di, Jn + dj
        col = index[ni, nj]
        keep = col >= 0
        rows.append(np.nonzero(keep)[0]); cols.append(col[keep]); vals.append(np.full(keep.sum(), 1 / h2))
        rhs[~keep] -= problem.boundary_values[ni[~keep], nj[~keep]] / h2
    L = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    u = problem.boundary_values.copy()
    u[I, Jn] = spla.spsolve(L.tocsc(), rhs)
    return u


def _index(problem):
    I, Jn = np.nonzero(problem.mask == INTERIOR)
    index = np.full(problem.shape, -1, dtype=np.int64)
    index[I, Jn] = np.arange(len(I))
    return index, I, Jn


@dataclass
class GraphSolution:
    u: np.ndarray
    residual_norm: float
    newton_iterations: int
    converged: bool
    message: str = ""
    min_ellipticity: float = np.inf
    history: list = field(default_factory=list)
    failed_node: tuple | None = None


def _frozen_step(problem, u, index, I, Jn):
    """Picard step: solve a u_xx + b u_xy + c u_yy = H0 with coefficients frozen at ``u``."""
    h = problem.h
    inner = problem.mask[1:-1, 1:-1] == INTERIOR
    p, q, *_ = (d[inner] for d in _derivs(u, h))
    a, b, c = _coefficients(problem.F, p, q).T
    weights = [-2 * (a + c) / h ** 2, a / h ** 2, a / h ** 2, c / h ** 2, c / h ** 2,
               b / (4 * h ** 2), b / (4 * h ** 2), -b / (4 * h ** 2), -b / (4 * h ** 2)]
    rhs = np.full(len(I), problem.H0)
    R, C, V = [], [], []
    for (di, dj), w in zip(_STENCIL, weights):
        col = index[I + di, Jn + dj]
        keep = col >= 0
        R.append(np.nonzero(keep)[0]); C.append(col[keep]); V.append(w[keep])
        rhs[~keep] -= w[~keep] * problem.boundary_values[I[~keep] + di, Jn[~keep] + dj]
    L = sp.csr_matrix((np.concatenate(V), (np.concatenate(R), np.concatenate(C))),
                      shape=(len(I), len(I)))
    out = u.copy()
    out[I, Jn] = spla.spsolve(L.tocsc(), rhs)
    return out


def solve_dirichlet(problem: GraphProblem, initial_guess=None, tol=NEWTON_TOL,
                    max_iter=MAX_ITER) -> GraphSolution:
    """Damped Newton on the discrete residual with a halving line search."""
    problem.validate()
    require_elliptic(problem.F)
    index, I, Jn = _index(problem)
    if initial_guess is None:
        u = harmonic_extension(problem)
    else:
        u = np.array(initial_guess, dtype=float)
        u[problem.mask == BOUNDARY] = problem.boundary_values[problem.mask == BOUNDARY]
    u = np.where(problem.mask == OUTSIDE, 0.0, u)
    Jm, res, disc, merit = _jacobian(problem, u, index)
    rnorm = float(np.max(np.abs(res))) if len(res) else 0.0
    history = [rnorm]
    min_disc = float(disc.min()) if len(disc) else np.inf
    it = 0
    while rnorm > tol and it < max_iter:
        if disc.min() <= 0:
            k = int(np.argmin(disc))
            return _finish(problem, u, rnorm, it, False, history, min_disc,
                           f"ellipticity lost at node {(int(I[k]), int(Jn[k]))}",
                           (int(I[k]), int(Jn[k])))
        it += 1
        delta = spla.spsolve(Jm.tocsc(), -res)
        t = 1.0
        while True:
            trial = u.copy()
            trial[I, Jn] += t * delta
            Jt, rt, dt, mt = _jacobian(problem, trial, index)
            if mt < merit or t < 1e-4:
                break
            t *= 0.5
        if not mt < merit:
            log.debug("line search stalled at iteration %d, taking a frozen-coefficient step", it)
            trial = _frozen_step(problem, u, index, I, Jn)
            Jt, rt, dt, mt = _jacobian(problem, trial, index)
            if not mt < merit:
                return _finish(problem, u, rnorm, it, False, history, min_disc,
                               "no descent from Newton or frozen-coefficient step")
        u, Jm, res, disc, merit = trial, Jt, rt, dt, mt
        rnorm = float(np.max(np.abs(res)))
        min_disc = min(min_disc, float(disc.min()))
        history.append(rnorm)
        log.debug("newton %d: step %.3g residual %.3e", it, t, rnorm)
    ok = rnorm <= tol
    msg = "converged" if ok else f"no convergence after {max_iter} iterations"
    return _finish(problem, u, rnorm, it, ok, history, min_disc, msg)


def _finish(problem, u, rnorm, it, ok, history, min_disc, msg, node=None):
    u = np.where(problem.mask == OUTSIDE, np.nan, u)
    return GraphSolution(u, rnorm, it, ok, msg, min_disc, history, node)


# ---------------------------------------------------------------- export

def write_solution_csv(path, problem: GraphProblem, sol: GraphSolution):
    X, Y = problem.mesh()
    res = camc_residual(problem, np.nan_to_num(sol.u))
    keep = problem.mask != OUTSIDE
    res = np.where(problem.mask == INTERIOR, res, 0.0)
    data = np.column_stack([X[keep], Y[keep], sol.u[keep], res[keep]])
    np.savetxt(path, data, delimiter=",", header="x,y,u,residual", comments="", fmt="%.17g")
    return Path(path)


def height_field_mesh(problem: GraphProblem, u):
    """Triangulate grid cells whose four corners carry values."""
    X, Y = problem.mesh()
    known = problem.mask != OUTSIDE
    idx = np.full(known.shape, -1, dtype=np.int64)
    idx[known] = np.arange(known.sum())
    V = np.column_stack([X[known], Y[known], u[known]])
    a, b = idx[:-1, :-1], idx[1:, :-1]
    c, d = idx[:-1, 1:], idx[1:, 1:]
    ok = (a >= 0) & (b >= 0) & (c >= 0) & (d >= 0)
    # x along the first axis, y along the second: (a, b, d) is counterclockwise seen from above
    T = np.concatenate([np.column_stack([a[ok], b[ok], d[ok]]),
                        np.column_stack([a[ok], d[ok], c[ok]])])
    return V, T


def write_solution_obj(path, problem: GraphProblem, sol: GraphSolution):
    V, T = height_field_mesh(problem, sol.u)
    return write_obj(path, V, T)


# ---------------------------------------------------------------- boundary traces

def wulff_cap_trace(F: AnisotropyFunction, H0: float, center=(0.0, 0.0, 0.0), tol=1e-14):
    """Height function of the part of (-2/H0) W with upward normal, as ``trace(x, y)``.

    The homothetic Wulff shape has CAMC H0 for the normal inherited from W, so
    this graph solves the equation exactly.  Points are found by Newton's method
    on the slope (p, q) of the normal.
    """
    if H0 == 0:
        raise ValueError("H0 must be nonzero")
    c = -2.0 / H0
    cx, cy, cz = center

    def trace(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        target = np.stack([x - cx, y - cy], -1) / c
        p = np.zeros(x.shape)
        q = np.zeros(x.shape)
        for _ in range(100):
            N = graph_normal(p, q)
            W2 = 1 + p ** 2 + q ** 2
            g = F.grad(N)
            r = g[..., :2] - target
            if np.max(np.abs(r), initial=0.0) < tol:
                break
            D = F.hess(N)
            dNp = np.stack([-np.ones_like(p), 0 * p, 0 * p], -1) / np.sqrt(W2)[..., None] \
                - N * (p / W2)[..., None]
            dNq = np.stack([0 * p, -np.ones_like(p), 0 * p], -1) / np.sqrt(W2)[..., None] \
                - N * (q / W2)[..., None]
            Jc = np.stack([np.einsum("...ij,...j->...i", D, dNp)[..., :2],
                           np.einsum("...ij,...j->...i", D, dNq)[..., :2]], -1)
            step = np.linalg.solve(Jc, -r[..., None])[..., 0]
            # keep Newton inside a trust region; far points need several steps
            scale = np.minimum(1.0, 1.0 / np.maximum(np.abs(step).max(axis=-1), 1e-300))
            p = p + scale * step[..., 0]
            q = q + scale * step[..., 1]
        else:
            raise ValueError("wulff cap trace did not converge; point outside the cap's shadow?")
        return cz + c * F.grad(graph_normal(p, q))[..., 2]

    return trace


def constant_trace(k):
    return lambda x, y: np.full(np.broadcast(np.asarray(x), np.asarray(y)).shape, float(k))


def affine_trace(a, b, c0):
    return lambda x, y: a * np.asarray(x, float) + b * np.asarray(y, float) + c0
