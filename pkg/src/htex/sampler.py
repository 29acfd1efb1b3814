"""CPU emulation of the three-fetch halfedge texture filter.

Each fetch is a GPU-style bilinear lookup with ``CLAMP_TO_BORDER`` and a
zero border colour: texel ``i`` covers ``[i/w, (i+1)/w)`` with its centre at
``(i + 0.5)/w`` and taps outside ``[0, w)`` contribute zero. Because the
normalization channel is zero on the border too, dividing the accumulated
payload by the accumulated normalization renormalizes the weights lost
outside each quad.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSampleError, FingerprintMismatchError
from .format import HtexTexture, TextureSet, level_side
from .halfedge import HalfedgeMesh
from .intrinsic import triangle_to_quad_uv


@dataclass(frozen=True)
class LodSelector:
    """How a mip level is chosen for each fetch.

    ``derivative`` mode takes the footprint of one pixel in quad units and
    selects ``log2(footprint * side)`` for each fetched texture.
    """

    mode: str = "base"
    level: float = 0.0
    footprint: object = None

    @classmethod
    def base(cls):
        return cls("base")

    @classmethod
    def explicit(cls, level):
        return cls("level", level=float(level))

    @classmethod
    def derivative(cls, du, dv=None):
        fp = np.asarray(du, dtype=float) if dv is None else np.maximum(np.abs(du), np.abs(dv))
        return cls("derivative", footprint=fp)

    def levels_for(self, log2_res):
        """Integer mip level per fetch, clamped to each texture's chain."""
        log2_res = np.asarray(log2_res)
        if self.mode == "base":
            return np.zeros_like(log2_res)
        elif self.mode == "level":
            lvl = np.full_like(log2_res, int(np.floor(max(self.level, 0.0) + 0.5)))
        elif self.mode == "derivative":
            with np.errstate(divide="ignore"):
                lod = np.log2(np.asarray(self.footprint, dtype=float) * (2.0 ** log2_res))
            lvl = np.floor(np.nan_to_num(lod, neginf=0.0) + 0.5).astype(np.int64)
        else:
            raise ValueError(f"unknown LOD mode {self.mode!r}")
        return np.clip(lvl, 0, log2_res)


@dataclass
class SampleResult:
    channels: np.ndarray
    taps_taken: int


# -- bilinear ----------------------------------------------------------------


def _bilinear_taps(side, x, y):
    """Yield ``(i, j, weight)`` for the four texels blended at ``(x, y)``."""
    sx = np.asarray(x, dtype=float) * side - 0.5
    sy = np.asarray(y, dtype=float) * side - 0.5
    i0 = np.floor(sx)
    j0 = np.floor(sy)
    fx = sx - i0
    fy = sy - j0
    i0 = i0.astype(np.int64)
    j0 = j0.astype(np.int64)
    for di, wx in ((0, 1.0 - fx), (1, fx)):
        for dj, wy in ((0, 1.0 - fy), (1, fy)):
            yield i0 + di, j0 + dj, wx * wy


def sample_bilinear_border(texture: HtexTexture, level: int, x, y) -> np.ndarray:
    """Bilinear fetch of all stored channels with a zero border.

    ``x`` and ``y`` may be arrays; the result has shape ``x.shape + (n + 1,)``.
    """
    if not 0 <= level < texture.n_levels:
        raise ValueError(f"level {level} outside [0, {texture.n_levels})")
    img = texture.levels[level]
    side = img.shape[0]
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = np.zeros(x.shape + (img.shape[2],))
    for i, j, w in _bilinear_taps(side, x, y):
        inside = (i >= 0) & (i < side) & (j >= 0) & (j < side)
        texel = img[np.where(inside, j, 0), np.where(inside, i, 0)]
        out += np.where(inside, w, 0.0)[..., None] * texel
    return out


class _Pack:
    """All levels of all textures flattened into one buffer for batched fetches."""

    def __init__(self, textures: TextureSet):
        E = len(textures)
        self.log2 = textures.log2_resolutions()
        n_lv = int(self.log2.max(initial=0)) + 1
        self.offsets = np.zeros((E, n_lv), dtype=np.int64)
        self.sides = np.ones((E, n_lv), dtype=np.int64)
        chunks, pos = [], 0
        for e, t in enumerate(textures.textures):
            starts = []
            for lvl in t.levels:
                starts.append(pos)
                chunks.append(lvl.reshape(-1, lvl.shape[2]))
                pos += lvl.shape[0] * lvl.shape[1]
            for k in range(n_lv):
                kk = min(k, t.log2_res)
                self.offsets[e, k] = starts[kk]
                self.sides[e, k] = level_side(t.log2_res, kk)
        self.buffer = np.concatenate(chunks).astype(np.float64)

    def fetch(self, e, level, x, y):
        side = self.sides[e, level]
        s = np.stack([x, y]) * side - 0.5
        s0 = np.floor(s)
        f = s - s0
        s0 = s0.astype(np.int64)
        # taps stacked on a leading axis: (i0,j0), (i0,j1), (i1,j0), (i1,j1)
        wx = np.stack([1.0 - f[0], f[0]])
        wy = np.stack([1.0 - f[1], f[1]])
        w = (wx[:, None] * wy[None, :]).reshape(4, -1)
        i = s0[0] + _DI
        j = s0[1] + _DJ
        inside = (i >= 0) & (i < side) & (j >= 0) & (j < side)
        idx = (self.offsets[e, level] + j * side + i) * inside
        return np.einsum("kn,knc->nc", w * inside, self.buffer[idx])


    def fetch_one(self, e, level, x, y):
        """Single-point version of :meth:`fetch` without array overhead."""
        side = int(self.sides[e, level])
        base = int(self.offsets[e, level])
        sx = x * side - 0.5
        sy = y * side - 0.5
        i0 = math.floor(sx)
        j0 = math.floor(sy)
        fx = sx - i0
        fy = sy - j0
        out = 0.0
        for i, wx in ((i0, 1.0 - fx), (i0 + 1, fx)):
            if not 0 <= i < side:
                continue
            for j, wy in ((j0, 1.0 - fy), (j0 + 1, fy)):
                if 0 <= j < side:
                    out = out + (wx * wy) * self.buffer[base + j * side + i]
        return out


_DI = np.array([0, 0, 1, 1])[:, None]
_DJ = np.array([0, 1, 0, 1])[:, None]


def packed(textures: TextureSet) -> _Pack:
    return textures.cached("pack", lambda: _Pack(textures))


def check_fingerprint(mesh: HalfedgeMesh, textures: TextureSet):
    if textures.fingerprint is not None and textures.fingerprint != mesh.fingerprint:
        raise FingerprintMismatchError(
            f"textures were made for mesh {textures.fingerprint.counts()} "
            f"but sampled on {mesh.fingerprint.counts()} (or the topology hash differs)"
        )
    if len(textures) != mesh.E:
        raise FingerprintMismatchError(f"{len(textures)} textures for a mesh with {mesh.E} edges")


# -- halfedge filter ---------------------------------------------------------


def htexture(mesh: HalfedgeMesh, textures: TextureSet, h, u, v, lod: LodSelector | None = None) -> SampleResult:
    """Filtered texture value at barycentrics ``(u, v)`` of ``h``'s triangle.

    Accumulates the quads of ``h``, ``next(h)`` and ``prev(h)``; the
    neighbours see the point through the reflections ``(v, -u)`` and
    ``(-v, u)``. Scalars give a ``(n,)`` result, arrays ``(N, n)``.
    """
    check_fingerprint(mesh, textures)
    lod = lod or _BASE
    if np.ndim(h) == 0 and np.ndim(u) == 0 and np.ndim(v) == 0 and np.ndim(lod.footprint) == 0:
        return _htexture_one(mesh, textures, int(h), float(u), float(v), lod)
    h, u, v = np.broadcast_arrays(np.atleast_1d(h), np.atleast_1d(np.asarray(u, float)), np.atleast_1d(np.asarray(v, float)))
    if ((h < 0) | (h >= mesh.H)).any():
        raise IndexError(f"halfedge index out of range [0, {mesh.H})")
    pack = packed(textures)
    N = len(h)
    # own quad, next(h) seen through (v, -u), prev(h) through (-v, u)
    hid = np.concatenate([h, mesh.next_ids[h], mesh.prev_ids[h]])
    a = np.concatenate([u, v, -v])
    b = np.concatenate([v, -u, u])
    x, y = triangle_to_quad_uv(mesh, hid, a, b)
    e = mesh.edge_ids[hid]
    if np.ndim(lod.footprint):
        lod = LodSelector(lod.mode, lod.level, np.tile(np.broadcast_to(lod.footprint, (N,)), 3))
    fetched = pack.fetch(e, lod.levels_for(pack.log2[e]), x, y)
    taps = len(fetched) // N
    c = fetched.reshape(taps, N, -1).sum(axis=0)

    n = textures.layout.n
    norm = c[:, n]
    if (norm <= 0).any():
        k = int(np.flatnonzero(norm <= 0)[0])
        raise DegenerateSampleError(f"no texel coverage at halfedge {int(h[k])}, (u, v) = ({u[k]}, {v[k]})")
    out = c[:, :n] / norm[:, None]
    return SampleResult(out, taps)


_BASE = LodSelector.base()


def _htexture_one(mesh, textures, h, u, v, lod):
    if not 0 <= h < mesh.H:
        raise IndexError(f"halfedge index out of range [0, {mesh.H})")
    pack = packed(textures)
    c = 0.0
    taps = 0
    for hid, a, b in ((h, u, v), (int(mesh.next_ids[h]), v, -u), (int(mesh.prev_ids[h]), -v, u)):
        if hid < mesh.twin_ids[hid]:
            a, b = 1.0 - a, 1.0 - b
        e = int(mesh.edge_ids[hid])
        level = 0 if lod.mode == "base" else int(lod.levels_for(pack.log2[e]))
        c = c + pack.fetch_one(e, level, a, b)
        taps += 1
    n = textures.layout.n
    if not np.ndim(c) or c[n] <= 0:
        raise DegenerateSampleError(f"no texel coverage at halfedge {h}, (u, v) = ({u}, {v})")
    return SampleResult(c[:n] / c[n], taps)


def htexture_trilinear(mesh, textures, h, u, v, level: float) -> SampleResult:
    """Blend of the two nearest levels, each renormalized before the blend."""
    level = max(float(level), 0.0)
    lo = int(np.floor(level))
    frac = level - lo
    a = htexture(mesh, textures, h, u, v, LodSelector.explicit(lo))
    if frac == 0.0:
        return a
    b = htexture(mesh, textures, h, u, v, LodSelector.explicit(lo + 1))
    return SampleResult((1.0 - frac) * a.channels + frac * b.channels, a.taps_taken + b.taps_taken)
