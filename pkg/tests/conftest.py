import numpy as np
import pytest
import hypothesis.strategies as st
from hypothesis import settings

from camc.anisotropy import AnisotropyFunction

settings.register_profile("camc", max_examples=60, deadline=None)
settings.load_profile("camc")

ELLIPSOID = AnisotropyFunction.ellipsoid(np.diag([4.0, 1.0, 1.0]), name="ellipsoid-411")
PERTURBED = AnisotropyFunction.perturbed(0.1, (1.0, 2.0, 3.0), name="perturbed-0.1")
CONSTANT = AnisotropyFunction.constant()
# a tilted ellipsoid with off-diagonal entries exercises the general Q path
TILTED = AnisotropyFunction.ellipsoid(np.array([[3.0, 0.5, 0.2], [0.5, 1.5, -0.3], [0.2, -0.3, 1.0]]),
                                      name="tilted")

CATALOG = [CONSTANT, ELLIPSOID, PERTURBED, TILTED]


@pytest.fixture(params=CATALOG, ids=lambda F: F.name)
def aniso(request):
    return request.param


@st.composite
def unit_vectors(draw):
    v = np.array([draw(st.floats(-1, 1, allow_nan=False)) for _ in range(3)])
    r = np.linalg.norm(v)
    if r < 1e-3:
        v, r = np.array([0.0, 0.0, 1.0]), 1.0
    return v / r


def random_units(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
