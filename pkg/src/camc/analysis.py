"""Diagnostics on computed surfaces: Gauss-image hemisphere test, separation constants, slices, heights."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ._linalg import as_unit, tangent_basis
from .wulff import pairwise_diameter, wulff_diameter

log = logging.getLogger(__name__)

SMALL_INPUT = 24


@dataclass
class HemisphereVerdict:
    feasible: bool
    witness: np.ndarray | None
    margin: float

    def to_dict(self):
        return {"feasible": self.feasible,
                "witness": None if self.witness is None else [float(v) for v in self.witness],
                "margin": self.margin}


def _score(normals, cands):
    """min_i <n_i, v> for each candidate v."""
    best_val, best_v = -np.inf, None
    for s in range(0, len(cands), 4096):
        blk = cands[s:s + 4096]
        vals = (blk @ normals.T).min(axis=1)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val, best_v = float(vals[k]), blk[k]
    return best_val, best_v


def _unit_rows(c):
    norms = np.linalg.norm(c, axis=1)
    keep = norms > 1e-12
    return c[keep] / norms[keep, None]


def _candidates_all(n):
    """Single normals, pair bisectors and triple circumcenters (both signs)."""
    m = len(n)
    cands = [n]
    pairs = np.array(list(itertools.combinations(range(m), 2)), dtype=np.int64).reshape(-1, 2)
    if len(pairs):
        cands.append(_unit_rows(n[pairs[:, 0]] + n[pairs[:, 1]]))
    tri = np.array(list(itertools.combinations(range(m), 3)), dtype=np.int64).reshape(-1, 3)
    if len(tri):
        c = _unit_rows(np.cross(n[tri[:, 1]] - n[tri[:, 0]], n[tri[:, 2]] - n[tri[:, 0]]))
        cands += [c, -c]
    return np.concatenate(cands)


def _candidates_hull(n, hull):
    """The same candidate families restricted to vertices, edges and facets of the hull."""
    eq = hull.equations[:, :3]
    simp = hull.simplices
    edges = np.concatenate([simp[:, [0, 1]], simp[:, [1, 2]], simp[:, [2, 0]]])
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    return np.concatenate([n[hull.vertices], _unit_rows(n[edges[:, 0]] + n[edges[:, 1]]),
                           eq, -eq])


def _planar(n, axis):
    """Normals spanning a plane through the origin with unit normal ``axis``."""
    e1, e2 = tangent_basis(axis)
    ang = np.sort(np.mod(np.arctan2(n @ e2, n @ e1), 2 * np.pi))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    k = int(np.argmax(gaps))
    arc = 2 * np.pi - gaps[k]
    if arc < np.pi:
        mid = ang[(k + 1) % len(ang)] + arc / 2
        v = np.cos(mid) * e1 + np.sin(mid) * e2
        return float(np.min(n @ v)), v
    return 0.0, axis


def hemisphere_classifier(normals) -> HemisphereVerdict:
    """Maximin margin max_{|v|=1} min_i <n_i, v>; feasible iff the normals fit a closed hemisphere.

    The optimum is attained at a direction equidistant from one, two or three
    active normals, so candidates are single normals, normalized pair sums and
    triple circumcenters.  Large inputs restrict these to the convex hull.
    """
    n = np.atleast_2d(np.asarray(normals, dtype=float))
    if n.size == 0:
        raise ValueError("hemisphere classifier needs at least one normal")
    n = as_unit(n, tol=1e-9)
    n = np.unique(np.round(n, 13), axis=0)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    _, sv, vt = np.linalg.svd(n, full_matrices=True)
    rank = int(np.sum(sv > 1e-10 * max(sv[0], 1.0)))
    if rank < 3:
        if rank == 1 or len(n) == 1:
            if len(n) == 1:
                return HemisphereVerdict(True, n[0].copy(), 1.0)
            # a normal and its antipode
            v = tangent_basis(n[0])[0]
            return HemisphereVerdict(True, v, 0.0)
        margin, v = _planar(n, vt[2])
        return HemisphereVerdict(margin >= 0, v, margin)
    if len(n) <= SMALL_INPUT:
        cands = _candidates_all(n)
    else:
        try:
            cands = _candidates_hull(n, ConvexHull(n))
        except QhullError:
            log.debug("qhull failed; falling back to full enumeration")
            cands = _candidates_all(n)
    margin, v = _score(n, cands)
    if abs(margin) < 1e-12:
        margin = 0.0
    return HemisphereVerdict(margin >= 0, v, margin)


def brute_force_margin(normals, samples=1_000_000, seed=0, polish=True):
    """Independent oracle: dense random directions, then a local Nelder-Mead polish of the best few."""
    from scipy.optimize import minimize

    n = np.asarray(normals, float)
    rng = np.random.default_rng(seed)
    best = []
    for s in range(0, samples, 100_000):
        v = rng.normal(size=(min(100_000, samples - s), 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        vals = (v @ n.T).min(axis=1)
        k = np.argsort(vals)[-5:]
        best += list(zip(vals[k], v[k]))
    best.sort(key=lambda t: t[0])
    val = best[-1][0]
    if not polish:
        return float(val)

    for _, v0 in best[-10:]:
        e1, e2 = tangent_basis(v0)

        def f(t, v0=v0, e1=e1, e2=e2):
            w = v0 + t[0] * e1 + t[1] * e2
            return -float((n @ (w / np.linalg.norm(w))).min())

        for scale in (1e-2, 1e-4):
            res = minimize(f, np.zeros(2), method="Nelder-Mead",
                           options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 6000,
                                    "initial_simplex": [[0, 0], [scale, 0], [0, scale]]})
            val = max(val, -res.fun)
    return float(val)


# ---------------------------------------------------------------- constants

@dataclass
class BoundsReport:
    d_W: float
    H0: float
    d0: float
    d0_lemma: float
    max_height: float | None = None
    heights: list = field(default_factory=list)
    slices: list = field(default_factory=list)
    hemisphere: HemisphereVerdict | None = None

    def to_dict(self):
        return {"d_w": self.d_W, "h0": self.H0, "d0": self.d0, "d0_lemma": self.d0_lemma,
                "heights": list(self.heights),
                "slices": [{"offset": o, "components": list(c)} for o, c in self.slices],
                "hemisphere": None if self.hemisphere is None else self.hemisphere.to_dict()}


def separation_constant(d_W, H0):
    """2 sqrt(3) d_W / |H0|."""
    if H0 == 0:
        raise ValueError("H0 must be nonzero")
    return 2.0 * np.sqrt(3.0) * d_W / abs(H0)


def meeks_constant(F, H0, subdivision_level=4) -> BoundsReport:
    """Wulff diameter and slab width; ``d0_lemma`` is the H0-free value 2 sqrt(3) d_W."""
    if H0 == 0:
        raise ValueError("H0 must be nonzero")
    d_W = wulff_diameter(F, subdivision_level)
    return BoundsReport(d_W, float(H0), separation_constant(d_W, H0), 2.0 * np.sqrt(3.0) * d_W)


# ---------------------------------------------------------------- slices

@dataclass
class SliceResult:
    offset: float
    diameters: list
    closed: list
    perturbed: bool = False


def slice_components_diameter(vertices, triangles, normal, offsets):
    """Diameters of the connected components of the mesh cut by planes <x, normal> = offset."""
    normal = as_unit(normal)
    out = []
    for off in offsets:
        off = float(off)
        h = vertices @ normal - off
        perturbed = False
        if np.any(np.abs(h) <= 1e-12):
            off += 1e-9
            h = vertices @ normal - off
            perturbed = True
            log.info("slice offset moved by 1e-9 to avoid a vertex on the plane")
        diam, closed = _slice(vertices, triangles, h)
        out.append(SliceResult(off, diam, closed, perturbed))
    return out


def _slice(vertices, triangles, h):
    side = h[triangles] > 0
    cut = side.any(axis=1) & ~side.all(axis=1)
    point_of = {}
    pts = []

    def crossing(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in point_of:
            t = h[a] / (h[a] - h[b])
            pts.append(vertices[a] + t * (vertices[b] - vertices[a]))
            point_of[key] = len(pts) - 1
        return point_of[key]

    segs = []
    for tri in triangles[cut]:
        segs.append([crossing(tri[k], tri[(k + 1) % 3]) for k in range(3)
                     if (h[tri[k]] > 0) != (h[tri[(k + 1) % 3]] > 0)])
    if not segs:
        return [], []
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    degree = np.zeros(n, int)
    for a, b in segs:
        parent[find(a)] = find(b)
        degree[a] += 1
        degree[b] += 1
    P = np.array(pts)
    roots = np.array([find(i) for i in range(n)])
    diam, closed = [], []
    for r in np.unique(roots):
        members = roots == r
        diam.append(pairwise_diameter(P[members]))
        closed.append(bool(np.all(degree[members] == 2)))
    order = np.argsort(diam)[::-1]
    return [float(diam[i]) for i in order], [closed[i] for i in order]


# ---------------------------------------------------------------- heights

def graph_height_report(points, plane_normal=(0.0, 0.0, 1.0), plane_offset=0.0):
    """Max unsigned distance of points to the plane <x, n> = offset; NaN rows are ignored."""
    pts = np.asarray(points, float).reshape(-1, 3)
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    n = as_unit(plane_normal)
    return float(np.max(np.abs(pts @ n - plane_offset)))


def solution_points(problem, solution):
    X, Y = problem.mesh()
    keep = np.isfinite(solution.u)
    return np.column_stack([X[keep], Y[keep], solution.u[keep]])
