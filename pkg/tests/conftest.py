import numpy as np
import pytest

from htex import meshes
from htex.baker import PositionShader, ResolutionPolicy, bake, corner_preprocess

CLOSED = ["cube", "icosphere", "torus", "truncated_tetrahedron"]
ALL = CLOSED + ["mixed", "grid", "triangle", "square"]


def random_barycentrics(rng, n):
    """Uniform points in the reference triangle as (u, v)."""
    a, b = rng.random(n), rng.random(n)
    flip = a + b > 1
    a[flip], b[flip] = 1 - a[flip], 1 - b[flip]
    return a, b


def random_queries(rng, mesh, n):
    h = rng.integers(0, mesh.H, n)
    u, v = random_barycentrics(rng, n)
    return h, u, v


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture(params=ALL)
def any_mesh(request):
    return meshes.FIXTURES[request.param]()


@pytest.fixture
def cube():
    return meshes.cube()


@pytest.fixture
def mixed():
    return meshes.mixed_polygons()


def baked(mesh, log2=4, shader=None, fix=True):
    ts = bake(mesh, shader or PositionShader(), ResolutionPolicy.uniform(log2))
    if fix:
        corner_preprocess(mesh, ts)
    return ts


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
