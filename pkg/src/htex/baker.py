"""Fill per-edge textures from surface shaders and fix up their corners."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError
from .format import MAX_LOG2_RES, ChannelLayout, HtexTexture, TextureSet, generate_mips
from .halfedge import BOUNDARY, HalfedgeMesh, face_normals, vertex_normals
from .intrinsic import quad_uv_to_barycentric, triangle_to_quad_uv, triangle_vertices

# -- shaders -----------------------------------------------------------------


class SurfaceShader:
    """Deterministic map from (positions, unit normals) to channel values.

    Subclasses set ``names`` and implement :meth:`evaluate` on ``(N, 3)``
    arrays, returning ``(N, len(names))``.
    """

    names: tuple = ("value",)

    def evaluate(self, positions, normals):
        raise NotImplementedError

    def __call__(self, positions, normals):
        positions = np.atleast_2d(np.asarray(positions, dtype=float))
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        out = np.asarray(self.evaluate(positions, normals), dtype=float)
        return out.reshape(len(positions), len(self.names))

    @property
    def layout(self):
        return ChannelLayout(self.names)


class ConstantShader(SurfaceShader):
    def __init__(self, value=1.0):
        self.value = np.atleast_1d(np.asarray(value, dtype=float))
        self.names = tuple(f"c{i}" for i in range(len(self.value))) if len(self.value) > 1 else ("value",)

    def evaluate(self, positions, normals):
        return np.broadcast_to(self.value, (len(positions), len(self.value)))


class PositionShader(SurfaceShader):
    """Emits the object-space position; smooth everywhere."""

    names = ("x", "y", "z")

    def __init__(self, scale=1.0, offset=0.0):
        self.scale = scale
        self.offset = offset

    def evaluate(self, positions, normals):
        return positions * self.scale + self.offset


class CheckerShader(SurfaceShader):
    """3D checkerboard in two colours (discontinuous by design)."""

    names = ("r", "g", "b")

    def __init__(self, frequency=4.0, a=(0.9, 0.9, 0.9), b=(0.15, 0.2, 0.6)):
        self.frequency = frequency
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)

    def evaluate(self, positions, normals):
        cell = np.floor(positions * self.frequency + 1e-9).astype(np.int64).sum(axis=1) % 2
        return np.where(cell[:, None] == 0, self.a, self.b)


class RadialDisplacementShader(SurfaceShader):
    """Single smooth height channel: ``amplitude * sin(fx) sin(fy) sin(fz)``."""

    names = ("height",)

    def __init__(self, amplitude=0.1, frequency=6.0):
        self.amplitude = amplitude
        self.frequency = frequency

    def evaluate(self, positions, normals):
        s = np.sin(positions * self.frequency)
        return self.amplitude * s.prod(axis=1, keepdims=True)


def sample_image_repeat(image, s, t):
    """Bilinear lookup with wrap-around; pixel ``(r, c)`` is centred at ``((c+.5)/W, (r+.5)/H)``."""
    image = np.asarray(image, dtype=float)
    if image.ndim == 2:
        image = image[..., None]
    H, W = image.shape[:2]
    sx = np.asarray(s, dtype=float) * W - 0.5
    sy = np.asarray(t, dtype=float) * H - 0.5
    c0 = np.floor(sx)
    r0 = np.floor(sy)
    fx = (sx - c0)[..., None]
    fy = (sy - r0)[..., None]
    c0 = c0.astype(np.int64)
    r0 = r0.astype(np.int64)
    c1 = (c0 + 1) % W
    r1 = (r0 + 1) % H
    c0 %= W
    r0 %= H
    top = image[r0, c0] * (1 - fx) + image[r0, c1] * fx
    bot = image[r1, c0] * (1 - fx) + image[r1, c1] * fx
    return top * (1 - fy) + bot * fy


class TriplanarShader(SurfaceShader):
    """Blend of three axis-aligned planar projections of one image.

    The x, y and z projections sample the image at ``(y, z)``, ``(x, z)`` and
    ``(x, y)`` times ``scale``, weighted by ``|n_axis|**sharpness`` normalized
    to sum to one.
    """

    def __init__(self, image, scale=1.0, sharpness=4):
        image = np.asarray(image, dtype=float)
        if image.size == 0:
            raise ValueError("triplanar source image is empty")
        self.image = image if image.ndim == 3 else image[..., None]
        self.scale = scale
        self.sharpness = sharpness
        n = self.image.shape[2]
        self.names = ("r", "g", "b", "a")[:n] if n <= 4 else tuple(f"c{i}" for i in range(n))

    def weights(self, normals):
        w = np.abs(np.atleast_2d(normals)) ** self.sharpness
        return w / w.sum(axis=1, keepdims=True)

    def evaluate(self, positions, normals):
        p = positions * self.scale
        w = self.weights(normals)
        out = w[:, 0:1] * sample_image_repeat(self.image, p[:, 1], p[:, 2])
        out = out + w[:, 1:2] * sample_image_repeat(self.image, p[:, 0], p[:, 2])
        return out + w[:, 2:3] * sample_image_repeat(self.image, p[:, 0], p[:, 1])


def triplanar_shader(image, scale=1.0) -> TriplanarShader:
    return TriplanarShader(image, scale)


def load_image(path) -> np.ndarray:
    """Read an 8-bit PNG or PPM as floats in [0, 1], shape ``(H, W, C)``."""
    from PIL import Image

    with Image.open(path) as im:
        if im.mode not in ("L", "RGB", "RGBA"):
            im = im.convert("RGB")
        a = np.asarray(im, dtype=np.float64) / 255.0
    return a if a.ndim == 3 else a[..., None]


# -- resolution ----------------------------------------------------------------


@dataclass(frozen=True)
class ResolutionPolicy:
    """``uniform``: every edge gets ``log2``; ``edge_length``: side ~ length * texels_per_unit."""

    mode: str = "uniform"
    log2: int = 4
    texels_per_unit: float = 16.0
    min_log2: int = 0
    max_log2: int = MAX_LOG2_RES

    @classmethod
    def uniform(cls, log2):
        return cls("uniform", log2=int(log2))

    @classmethod
    def edge_length(cls, texels_per_unit, min_log2=0, max_log2=MAX_LOG2_RES):
        return cls("edge_length", texels_per_unit=float(texels_per_unit), min_log2=min_log2, max_log2=max_log2)

    def resolve(self, mesh: HalfedgeMesh) -> np.ndarray:
        if self.mode == "uniform":
            if not 0 <= self.log2 <= MAX_LOG2_RES:
                raise ValueError(f"log2 resolution {self.log2} outside [0, {MAX_LOG2_RES}]")
            return np.full(mesh.E, self.log2, dtype=np.int64)
        if self.mode == "edge_length":
            lo = max(0, self.min_log2)
            hi = min(MAX_LOG2_RES, self.max_log2)
            owner = mesh.edge_owner
            a = mesh.positions[mesh.vert_ids[owner]]
            b = mesh.positions[mesh.vert_ids[mesh.next_ids[owner]]]
            texels = np.maximum(np.linalg.norm(a - b, axis=1) * self.texels_per_unit, 1.0)
            return np.clip(np.round(np.log2(texels)).astype(np.int64), lo, hi)
        raise ValueError(f"unknown resolution policy {self.mode!r}")


# -- baking --------------------------------------------------------------------


def texel_centers(side):
    """Quad coordinates ``(x, y)`` of texel centres as ``[row, column]`` grids."""
    c = (np.arange(side) + 0.5) / side
    y, x = np.meshgrid(c, c, indexing="ij")
    return x, y


def mirror_mask(side):
    """Texels whose centre satisfies ``x + y > 1`` (copied on boundary edges)."""
    j, i = np.indices((side, side))
    return i + j >= side


def mirror_boundary(base):
    """Copy each texel ``(i, j)`` with ``i + j >= w`` from ``(w-1-i, w-1-j)`` in place."""
    mask = mirror_mask(base.shape[0])
    base[mask] = base[::-1, ::-1][mask]
    return base


def check_degenerate(mesh: HalfedgeMesh, rtol=1e-12):
    v0, v1, v2 = triangle_vertices(mesh)
    area2 = np.linalg.norm(np.cross(v0 - v1, v2 - v1), axis=1)
    scale = np.ptp(mesh.positions, axis=0).max(initial=0.0) or 1.0
    bad = np.flatnonzero(area2 <= rtol * scale * scale)
    if len(bad):
        raise DegenerateGeometryError(f"intrinsic triangle of halfedge {int(bad[0])} has zero area")


def shading_normals(mesh, h, u, v, w, vnormals=None, fnormals=None):
    """Unit normal blended from the vertex normals at v2/v0 and the face normal at v1."""
    vnormals = vertex_normals(mesh) if vnormals is None else vnormals
    fnormals = face_normals(mesh) if fnormals is None else fnormals
    n = (np.asarray(u)[..., None] * vnormals[mesh.vert_ids[h]]
         + np.asarray(v)[..., None] * vnormals[mesh.vert_ids[mesh.next_ids[h]]]
         + np.asarray(w)[..., None] * fnormals[mesh.face_ids[h]])
    return n / np.linalg.norm(n, axis=-1, keepdims=True)


def _bake_group(mesh, shader, edges, log2, vnormals, fnormals):
    side = 2 ** log2
    x, y = texel_centers(side)
    ee = np.repeat(edges, side * side)
    xx = np.tile(x.ravel(), len(edges))
    yy = np.tile(y.ravel(), len(edges))
    pts, h, (u, v, w) = quad_uv_to_barycentric(mesh, ee, xx, yy)
    normals = shading_normals(mesh, h, u, v, w, vnormals, fnormals)
    vals = shader(pts, normals).reshape(len(edges), side, side, -1)
    ones = np.ones(vals.shape[:3] + (1,))
    vals = np.concatenate([vals, ones], axis=3).astype(np.float32)
    out = []
    for k, e in enumerate(edges):
        base = np.ascontiguousarray(vals[k])
        if mesh.twin_ids[mesh.edge_owner[e]] == BOUNDARY:
            mirror_boundary(base)
        out.append(generate_mips(HtexTexture(int(e), int(log2), [base])))
    return out


def bake(mesh: HalfedgeMesh, shader: SurfaceShader, policy: ResolutionPolicy | None = None,
         threads: int | None = None) -> TextureSet:
    """Evaluate ``shader`` at every texel centre of every edge's quad."""
    policy = policy or ResolutionPolicy()
    check_degenerate(mesh)
    vnormals = vertex_normals(mesh)
    fnormals = face_normals(mesh)
    res = policy.resolve(mesh)
    groups = []
    for lg in np.unique(res):
        edges = np.flatnonzero(res == lg)
        # bound the batch size so 4k textures do not allocate all at once
        step = max(1, 2 ** 18 // 4 ** int(lg))
        groups += [(edges[i:i + step], int(lg)) for i in range(0, len(edges), step)]
    work = lambda g: _bake_group(mesh, shader, g[0], g[1], vnormals, fnormals)
    if threads and threads > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, groups))
    else:
        results = [work(g) for g in groups]
    textures = [None] * mesh.E
    for batch in results:
        for t in batch:
            textures[t.edge] = t
    return TextureSet(shader.layout, textures, mesh.fingerprint)


# -- corner pre-processing ---------------------------------------------------------


def corner_sets(mesh: HalfedgeMesh, textures: TextureSet):
    """Groups of base-level texels ``(edge, i, j)`` that share a geometric corner.

    Every halfedge anchors three quad corners: ``vert(h)`` at barycentric
    (1, 0), ``vert(next(h))`` at (0, 1) and its face centroid at (0, 0).
    Groups sharing a texel (1x1 textures) are merged.
    """
    parent: dict = {}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    def union(a, b):
        parent.setdefault(a, a)
        parent.setdefault(b, b)
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    for h in range(mesh.H):
        e = int(mesh.edge_ids[h])
        last = textures[e].side - 1
        anchors = (
            (("v", int(mesh.vert_ids[h])), (1.0, 0.0)),
            (("v", int(mesh.vert_ids[mesh.next_ids[h]])), (0.0, 1.0)),
            (("f", int(mesh.face_ids[h])), (0.0, 0.0)),
        )
        for key, (a, b) in anchors:
            x, y = triangle_to_quad_uv(mesh, h, a, b)
            union(key, ("t", e, int(round(x)) * last, int(round(y)) * last))

    groups: dict = {}
    for k in parent:
        if k[0] == "t":
            groups.setdefault(find(k), []).append(k[1:])
    return [sorted(g) for _, g in sorted(groups.items())]


def corner_preprocess(mesh: HalfedgeMesh, textures: TextureSet) -> TextureSet:
    """Give every texel set sharing a corner the mean of its payload, in place."""
    n = textures.layout.n
    for group in corner_sets(mesh, textures):
        vals = np.array([textures[e].levels[0][j, i, :n] for e, i, j in group], dtype=np.float64)
        mean = vals.mean(axis=0).astype(np.float32)
        for e, i, j in group:
            textures[e].levels[0][j, i, :n] = mean
    for e, t in enumerate(textures.textures):
        if mesh.twin_ids[mesh.edge_owner[e]] == BOUNDARY:
            mirror_boundary(t.levels[0])
        textures.textures[e] = generate_mips(t)
    textures.touch()
    return textures


SHADERS = {
    "constant": ConstantShader,
    "position": PositionShader,
    "position-xyz": PositionShader,
    "checker": CheckerShader,
    "radial-displacement": RadialDisplacementShader,
    "radial": RadialDisplacementShader,
}


def make_shader(name, **params) -> SurfaceShader:
    if name == "triplanar":
        image = params.pop("image")
        if not isinstance(image, np.ndarray):
            image = load_image(image)
        return TriplanarShader(image, **params)
    try:
        cls = SHADERS[name]
    except KeyError:
        raise ValueError(f"unknown shader {name!r}; choose from {sorted(SHADERS) + ['triplanar']}") from None
    return cls(**params)


def mean_edge_length(mesh: HalfedgeMesh) -> float:
    owner = mesh.edge_owner
    d = mesh.positions[mesh.vert_ids[owner]] - mesh.positions[mesh.vert_ids[mesh.next_ids[owner]]]
    return float(np.linalg.norm(d, axis=1).mean())


def auto_policy(mesh: HalfedgeMesh, texels_per_edge=16) -> ResolutionPolicy:
    """Edge-length policy giving roughly ``texels_per_edge`` on an average edge."""
    return ResolutionPolicy.edge_length(texels_per_edge / max(mean_edge_length(mesh), math.ulp(1.0)))
