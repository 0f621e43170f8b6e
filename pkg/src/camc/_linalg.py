import numpy as np

UNIT_TOL = 1e-12


class DomainError(ValueError):
    pass


def normalized(a, axis=-1):
    a = np.asarray(a, dtype=float)
    return a / np.linalg.norm(a, axis=axis, keepdims=True)


def as_unit(n, tol=UNIT_TOL):
    """Return ``n`` renormalized, or raise if it is not unit within ``tol``."""
    n = np.asarray(n, dtype=float)
    norms = np.linalg.norm(n, axis=-1)
    if np.any(np.abs(norms - 1.0) > tol):
        bad = float(np.max(np.abs(norms - 1.0)))
        raise DomainError(f"expected unit vector(s); | |n| - 1 | = {bad:.3e}")
    return n / norms[..., None]


def tangent_basis(n):
    """Orthonormal (e1, e2) spanning n-perp, with e1 x e2 = n. Batched over leading axes."""
    n = np.asarray(n, dtype=float)
    helper = np.zeros_like(n)
    # pick the coordinate axis least aligned with n
    idx = np.argmin(np.abs(n), axis=-1)
    np.put_along_axis(helper, idx[..., None], 1.0, axis=-1)
    e1 = np.cross(helper, n)
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(n, e1)
    return e1, e2


def sym3(a, b):
    """Symmetrize the outer product of a 2-tensor ``a`` and a vector ``b``: three index placements."""
    return (
        np.einsum("...ij,...k->...ijk", a, b)
        + np.einsum("...ik,...j->...ijk", a, b)
        + np.einsum("...jk,...i->...ijk", a, b)
    )
