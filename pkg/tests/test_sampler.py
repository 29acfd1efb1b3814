import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from htex import meshes
from htex.baker import ConstantShader, PositionShader, ResolutionPolicy, bake
from htex.errors import DegenerateSampleError
from htex.format import ChannelLayout, HtexTexture, TextureSet
from htex.halfedge import BOUNDARY
from htex.intrinsic import triangle_to_quad_uv
from htex.sampler import LodSelector, htexture, htexture_trilinear, sample_bilinear_border

from conftest import baked, random_barycentrics, random_queries
from oracles import htexture_bruteforce, tent

FIXTURES = ["cube", "icosphere", "mixed", "truncated_tetrahedron", "grid"]


def random_textures(rng, mesh, log2=2, n=3):
    texs = [HtexTexture.from_base(e, rng.random((2 ** log2, 2 ** log2, n))) for e in range(mesh.E)]
    return TextureSet(ChannelLayout(tuple("abc"[:n])), texs, mesh.fingerprint)


class TestBilinear:
    def test_single_texel_centre(self):
        t = HtexTexture.from_base(0, np.full((1, 1, 1), 0.7, np.float32))
        np.testing.assert_allclose(sample_bilinear_border(t, 0, 0.5, 0.5), [np.float32(0.7), 1.0])

    def test_single_texel_edge(self):
        # sx = -0.5: half the horizontal weight lands on the zero border
        t = HtexTexture.from_base(0, np.full((1, 1, 1), 0.7, np.float32))
        np.testing.assert_allclose(sample_bilinear_border(t, 0, 0.0, 0.5), [np.float32(0.7) / 2, 0.5])

    def test_fully_outside(self, rng):
        t = HtexTexture.from_base(0, rng.random((4, 4, 2)))
        np.testing.assert_array_equal(sample_bilinear_border(t, 0, -1.0, -1.0), np.zeros(3))

    def test_matches_tent_weights(self, rng):
        t = HtexTexture.from_base(0, rng.random((4, 4, 2)))
        img = t.levels[0].astype(float)
        for x, y in rng.uniform(-0.3, 1.3, (200, 2)):
            ref = np.einsum("j,i,jic->c", tent(y, 4), tent(x, 4), img)
            np.testing.assert_allclose(sample_bilinear_border(t, 0, x, y), ref, atol=1e-12)

    def test_vectorized(self, rng):
        t = HtexTexture.from_base(0, rng.random((8, 8, 1)))
        xy = rng.uniform(-0.2, 1.2, (50, 2))
        batch = sample_bilinear_border(t, 1, xy[:, 0], xy[:, 1])
        for k, (x, y) in enumerate(xy):
            np.testing.assert_allclose(batch[k], sample_bilinear_border(t, 1, x, y), atol=1e-15)

    def test_bad_level(self, rng):
        t = HtexTexture.from_base(0, rng.random((4, 4, 1)))
        with pytest.raises(ValueError):
            sample_bilinear_border(t, 3, 0.5, 0.5)


class TestHtexture:
    @pytest.mark.parametrize("name", FIXTURES)
    def test_constant(self, name, rng):
        m = meshes.FIXTURES[name]()
        ts = bake(m, ConstantShader([0.25, -3.0]), ResolutionPolicy.uniform(3))
        h, u, v = random_queries(rng, m, 500)
        np.testing.assert_allclose(htexture(m, ts, h, u, v).channels, np.tile([0.25, -3.0], (500, 1)), atol=1e-6)

    @pytest.mark.parametrize("name", FIXTURES)
    def test_oracle_equivalence(self, name, rng):
        m = meshes.FIXTURES[name]()
        ts = random_textures(rng, m)
        h, u, v = random_queries(rng, m, 150)
        fast = htexture(m, ts, h, u, v).channels
        for k in range(len(h)):
            ref, fetches, taps = htexture_bruteforce(m, ts, h[k], u[k], v[k])
            assert fetches == 3 and taps <= 12
            np.testing.assert_allclose(fast[k], ref, atol=1e-9, rtol=0)

    def test_interior_equals_own_quad(self, cube, rng):
        ts = random_textures(rng, cube, log2=3)
        w = 8
        hits = 0
        for _ in range(400):
            h = int(rng.integers(cube.H))
            u, v = random_barycentrics(rng, 1)
            x, y = triangle_to_quad_uv(cube, h, u[0], v[0])
            if not (1 / w <= x <= 1 - 1 / w and 1 / w <= y <= 1 - 1 / w):
                continue
            hits += 1
            own = sample_bilinear_border(ts[cube.edge(h)], 0, x, y)
            np.testing.assert_allclose(own[3], 1.0, atol=1e-12)
            np.testing.assert_allclose(htexture(cube, ts, h, u[0], v[0]).channels, own[:3], atol=1e-12)
        assert hits > 100

    def test_scalar_shape(self, cube):
        ts = bake(cube, ConstantShader([1.0, 2.0]), ResolutionPolicy.uniform(1))
        res = htexture(cube, ts, 3, 0.2, 0.3)
        assert res.channels.shape == (2,)
        assert res.taps_taken == 3

    @pytest.mark.parametrize("name", ["mixed", "truncated_tetrahedron"])
    def test_scalar_matches_batch(self, name, rng):
        m = meshes.FIXTURES[name]()
        ts = bake(m, PositionShader(), ResolutionPolicy.edge_length(8.0))
        h, u, v = random_queries(rng, m, 300)
        fp = rng.uniform(0, 0.5, 300)
        batch = htexture(m, ts, h, u, v).channels
        blurred = htexture(m, ts, h, u, v, LodSelector.derivative(fp)).channels
        for k in range(300):
            np.testing.assert_allclose(htexture(m, ts, int(h[k]), u[k], v[k]).channels, batch[k], atol=1e-12)
            one = htexture(m, ts, int(h[k]), u[k], v[k], LodSelector.derivative(fp[k])).channels
            np.testing.assert_allclose(one, blurred[k], atol=1e-12)

    def test_tap_count(self, cube, rng):
        ts = random_textures(rng, cube)
        for _ in range(20):
            h, u, v = random_queries(rng, cube, 1)
            assert htexture(cube, ts, h[0], u[0], v[0]).taps_taken == 3

    def test_degenerate(self, cube):
        ts = bake(cube, ConstantShader(1.0), ResolutionPolicy.uniform(2))
        with pytest.raises(DegenerateSampleError, match="halfedge 0"):
            htexture(cube, ts, 0, 5.0, 5.0)


@pytest.mark.parametrize("name", FIXTURES)
def test_partition_of_unity(name, rng):
    m = meshes.FIXTURES[name]()
    ts = bake(m, ConstantShader([1.0, 1.0, 1.0]), ResolutionPolicy.edge_length(6.0, max_log2=4))
    h, u, v = random_queries(rng, m, 2000)
    np.testing.assert_allclose(htexture(m, ts, h, u, v).channels, 1.0, atol=1e-6)


class TestContinuity:
    @settings(max_examples=60, deadline=None)
    @given(t=st.floats(0, 1), name=st.sampled_from(["cube", "mixed", "truncated_tetrahedron", "icosphere"]))
    def test_spokes(self, t, name):
        m = meshes.FIXTURES[name]()
        ts = _fixed(name)
        h = np.arange(m.H)
        a = htexture(m, ts, h, np.zeros(m.H), np.full(m.H, t)).channels
        b = htexture(m, ts, m.next_ids, np.full(m.H, t), np.zeros(m.H)).channels
        assert np.abs(a - b).max() <= 1e-5

    @settings(max_examples=60, deadline=None)
    @given(s=st.floats(0, 1), name=st.sampled_from(["cube", "mixed", "truncated_tetrahedron", "icosphere"]))
    def test_diagonals(self, s, name):
        m = meshes.FIXTURES[name]()
        ts = _fixed(name)
        h = np.flatnonzero(m.twin_ids != BOUNDARY)
        a = htexture(m, ts, h, np.full(len(h), s), np.full(len(h), 1 - s)).channels
        b = htexture(m, ts, m.twin_ids[h], np.full(len(h), 1 - s), np.full(len(h), s)).channels
        assert np.abs(a - b).max() <= 1e-12


_FIXED = {}


def _fixed(name):
    if name not in _FIXED:
        _FIXED[name] = baked(meshes.FIXTURES[name](), 4)
    return _FIXED[name]


class TestTrilinear:
    def test_level_zero(self, cube, rng):
        ts = random_textures(rng, cube, log2=3)
        h, u, v = random_queries(rng, cube, 100)
        np.testing.assert_array_equal(htexture_trilinear(cube, ts, h, u, v, 0.0).channels,
                                      htexture(cube, ts, h, u, v).channels)

    def test_constant_any_level(self, cube, rng):
        ts = bake(cube, ConstantShader(0.4), ResolutionPolicy.uniform(3))
        h, u, v = random_queries(rng, cube, 100)
        for level in (0.3, 1.5, 2.75, 9.0):
            np.testing.assert_allclose(htexture_trilinear(cube, ts, h, u, v, level).channels, 0.4, atol=1e-6)

    def test_half_level(self, cube, rng):
        ts = random_textures(rng, cube, log2=3)
        h, u, v = random_queries(rng, cube, 100)
        a = htexture(cube, ts, h, u, v, LodSelector.explicit(0)).channels
        b = htexture(cube, ts, h, u, v, LodSelector.explicit(1)).channels
        np.testing.assert_allclose(htexture_trilinear(cube, ts, h, u, v, 0.5).channels, (a + b) / 2, atol=1e-6)


class TestLod:
    def test_explicit_clamped(self):
        assert LodSelector.explicit(7.2).levels_for(np.array([3, 5])).tolist() == [3, 5]
        assert LodSelector.explicit(-2).levels_for(np.array([3])).tolist() == [0]

    def test_derivative(self):
        lod = LodSelector.derivative(np.array([1 / 16, 1 / 4, 1.0, 1e-9]))
        assert lod.levels_for(np.array([4, 4, 4, 4])).tolist() == [0, 2, 4, 0]

    def test_mixed_resolution_levels(self):
        # a footprint of 1/8 quad is level 1 on 16^2 and level 0 on 8^2
        lod = LodSelector.derivative(np.array([1 / 8, 1 / 8]))
        assert lod.levels_for(np.array([4, 3])).tolist() == [1, 0]
