"""Triangle-mesh primitives: icosphere directions, topology helpers and OBJ/CSV export."""
from __future__ import annotations

from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp


@lru_cache(maxsize=8)
def _icosphere(level: int):
    t = (1.0 + 5.0 ** 0.5) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in verts]
    for _ in range(level):
        cache = {}

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    V = np.array(verts)
    T = np.array(faces, dtype=np.int64)
    V.setflags(write=False)
    T.setflags(write=False)
    return V, T


def icosphere(level: int):
    """Unit icosphere with ``10 * 4**level + 2`` vertices and outward counterclockwise faces."""
    if level < 0:
        raise ValueError("subdivision level must be >= 0")
    V, T = _icosphere(int(level))
    return V.copy(), T.copy()


def face_geometry(vertices, triangles):
    """Per-triangle (area, unit normal, centroid)."""
    P = vertices[triangles]
    cr = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
    dbl = np.linalg.norm(cr, axis=1)
    return 0.5 * dbl, cr / dbl[:, None], P.mean(axis=1)


def vertex_areas(vertices, triangles):
    """Barycentric (one-third) vertex areas."""
    area, _, _ = face_geometry(vertices, triangles)
    out = np.zeros(len(vertices))
    for k in range(3):
        np.add.at(out, triangles[:, k], area / 3.0)
    return out


def edge_face_counts(triangles):
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    e.sort(axis=1)
    _, counts = np.unique(e, axis=0, return_counts=True)
    return counts


def is_closed(triangles) -> bool:
    return bool(np.all(edge_face_counts(triangles) == 2))


def enclosed_volume(vertices, triangles) -> float:
    P = vertices[triangles]
    return float(np.einsum("ij,ij->i", P[:, 0], np.cross(P[:, 1], P[:, 2])).sum() / 6.0)


def adjacency(n_vertices, triangles):
    rows = triangles[:, [0, 1, 2, 1, 2, 0]].ravel()
    cols = triangles[:, [1, 2, 0, 0, 1, 2]].ravel()
    A = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_vertices, n_vertices))
    A = A.tocsr()
    A.data[:] = 1.0
    return A


def k_ring(n_vertices, triangles, k=2):
    """List of neighbor index arrays (excluding the vertex itself) within ``k`` edge hops."""
    A = adjacency(n_vertices, triangles)
    R = A.copy()
    for _ in range(k - 1):
        R = R + R @ A
    R = R.tocsr()
    R.setdiag(0)
    R.eliminate_zeros()
    return [R.indices[R.indptr[i]:R.indptr[i + 1]] for i in range(n_vertices)]


def write_obj(path, vertices, triangles, normals=None):
    """ASCII OBJ; faces are written 1-based in the stored (counterclockwise outward) order."""
    path = Path(path)
    lines = [f"# vertices {len(vertices)} faces {len(triangles)}"]
    lines += [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in vertices]
    if normals is not None:
        lines += [f"vn {x:.17g} {y:.17g} {z:.17g}" for x, y, z in normals]
        lines += [f"f {a}//{a} {b}//{b} {c}//{c}" for a, b, c in triangles + 1]
    else:
        lines += [f"f {a} {b} {c}" for a, b, c in triangles + 1]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_obj(path):
    verts, norms, faces = [], [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "vn":
            norms.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    return (np.array(verts), np.array(faces, dtype=np.int64),
            np.array(norms) if norms else None)
