import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from htex import HtexBaker, meshes
from htex.errors import MeshError
from htex.halfedge import HalfedgeMesh, save_obj
from htex.sampler import htexture

from conftest import baked, random_queries


def test_params_roundtrip():
    est = HtexBaker(shader="checker", shader_params={"frequency": 2.0}, log2_res=3)
    p = est.get_params()
    assert p["shader"] == "checker" and p["log2_res"] == 3
    c = clone(est)
    assert c.get_params() == p and c is not est
    est.set_params(level=1.5)
    assert est.level == 1.5


def test_fit_transform_matches_sampler(cube, rng):
    est = HtexBaker(log2_res=3).fit(cube)
    h, u, v = random_queries(rng, cube, 50)
    out = est.transform(np.column_stack([h, u, v]))
    ref = htexture(cube, baked(cube, 3), h, u, v).channels
    np.testing.assert_array_equal(out, ref)
    assert est.n_features_out_ == 3
    assert est.get_feature_names_out().tolist() == ["x", "y", "z"]


def test_fit_transform_default_centroids(mixed):
    out = HtexBaker(shader="constant", shader_params={"value": 0.5}).fit_transform(mixed)
    assert out.shape == (mixed.H, 1)
    np.testing.assert_allclose(out, 0.5, atol=1e-6)


def test_fit_from_obj(tmp_path):
    p = tmp_path / "c.obj"
    p.write_text(save_obj(meshes.cube()))
    assert HtexBaker(log2_res=1).fit(str(p)).mesh_.E == 12


def test_fractional_level(cube, rng):
    est = HtexBaker(shader="constant", shader_params={"value": 2.0}, level=0.5).fit(cube)
    h, u, v = random_queries(rng, cube, 10)
    np.testing.assert_allclose(est.transform(np.column_stack([h, u, v])), 2.0, atol=1e-6)


def test_not_fitted():
    with pytest.raises(NotFittedError):
        HtexBaker().transform([[0, 0.2, 0.2]])


def test_rejects_bad_mesh():
    p, f = meshes.nonmanifold_fin()
    with pytest.raises(MeshError):
        HtexBaker().fit(HalfedgeMesh.from_polygons(p, f, strict=False))
    with pytest.raises(TypeError):
        HtexBaker().fit(42)


@pytest.mark.parametrize("X", [
    [[0, 0.2]],
    [[0.5, 0.2, 0.2]],
    [[24, 0.2, 0.2]],
    [[-1, 0.2, 0.2]],
    [[0, 0.8, 0.8]],
    [[0, -0.1, 0.2]],
    [[0, np.nan, 0.2]],
])
def test_query_validation(cube, X):
    est = HtexBaker(log2_res=1).fit(cube)
    with pytest.raises(ValueError):
        est.transform(np.asarray(X, dtype=float))
