"""Software tessellation, displacement and rasterization of the intrinsic triangulation.

Also hosts the two continuity validators: :func:`seam_check` compares
filtered texture values across shared triangle sides and :func:`crack_check`
compares displaced positions.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .baker import shading_normals
from .errors import HtexError
from .format import TextureSet
from .halfedge import HalfedgeMesh, face_normals, vertex_normals
from .intrinsic import barycentric_point, triangle_to_quad_uv, triangle_vertices
from .sampler import LodSelector, check_fingerprint, htexture


class CrackWarning(UserWarning):
    pass


# -- displacement ------------------------------------------------------------------


def displace(mesh, textures, channel, h, u, v, w, scale=1.0, bias=0.0, vnormals=None, fnormals=None):
    """Displaced positions and shading normals of barycentric points of ``h``'s triangle.

    ``w`` is passed explicitly so shared sides evaluate bit-identical weights.
    """
    h = np.asarray(h)
    v0, v1, v2 = triangle_vertices(mesh, h)
    base = barycentric_point(v0, v1, v2, u, v, w)
    normals = shading_normals(mesh, h, u, v, w, vnormals, fnormals)
    if textures is None or (scale == 0 and bias == 0):
        return base, normals
    if not 0 <= channel < textures.layout.n:
        raise HtexError(f"displacement channel {channel} not in layout {textures.layout.names}")
    d = htexture(mesh, textures, h, u, v).channels[..., channel] * scale + bias
    return base + d[..., None] * normals, normals


@dataclass
class TriangleSoup:
    """Independent triangles; ``params`` holds the intrinsic ``(u, v)`` per corner."""

    positions: np.ndarray
    normals: np.ndarray
    halfedge: np.ndarray
    params: np.ndarray

    def __len__(self):
        return len(self.halfedge)


def _subdivision(level):
    n = 2 ** level
    ij = [(i, j) for j in range(n + 1) for i in range(n + 1 - j)]
    index = {p: k for k, p in enumerate(ij)}
    tris = []
    for j in range(n):
        for i in range(n - j):
            tris.append((index[i, j], index[i + 1, j], index[i, j + 1]))
            if i + j < n - 1:
                tris.append((index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]))
    ij = np.asarray(ij, dtype=np.int64)
    return n, ij, np.asarray(tris, dtype=np.int64)


def tessellate_displaced(mesh: HalfedgeMesh, textures: TextureSet | None, channel: int = 0, level: int = 0,
                         scale: float = 0.0, bias: float = 0.0) -> TriangleSoup:
    """Split each intrinsic triangle into ``4**level`` pieces and displace along normals."""
    if level < 0:
        raise ValueError("tessellation level must be >= 0")
    if textures is not None:
        check_fingerprint(mesh, textures)
        if not 0 <= channel < textures.layout.n:
            raise HtexError(f"displacement channel {channel} not in layout {textures.layout.names}")
    n, ij, tris = _subdivision(level)
    H = mesh.H
    hh = np.repeat(np.arange(H), len(ij))
    u = np.tile(ij[:, 0], H) / n
    v = np.tile(ij[:, 1], H) / n
    w = np.tile(n - ij[:, 0] - ij[:, 1], H) / n
    pos, nrm = displace(mesh, textures, channel, hh, u, v, w, scale, bias,
                        vertex_normals(mesh), face_normals(mesh))
    k = len(ij)
    corners = (np.arange(H)[:, None, None] * k + tris[None]).reshape(-1, 3)
    params = np.stack([u, v], axis=1)
    return TriangleSoup(pos[corners], nrm[corners], np.repeat(np.arange(H), len(tris)), params[corners])


# -- camera & raster ----------------------------------------------------------------


@dataclass(frozen=True)
class Camera:
    eye: tuple
    target: tuple
    up: tuple = (0.0, 0.0, 1.0)
    fov: float = np.pi / 3
    width: int = 256
    height: int = 256
    near: float = 0.01
    far: float = 100.0

    def __post_init__(self):
        if not 0 < self.near < self.far:
            raise ValueError("camera needs 0 < near < far")
        if not 0 < self.fov < np.pi:
            raise ValueError("camera fov must lie in (0, pi)")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("zero-area viewport")
        if np.allclose(np.asarray(self.eye, float), np.asarray(self.target, float)):
            raise ValueError("camera eye and target coincide")

    def view_basis(self):
        eye = np.asarray(self.eye, float)
        fwd = np.asarray(self.target, float) - eye
        fwd /= np.linalg.norm(fwd)
        right = np.cross(fwd, np.asarray(self.up, float))
        if np.linalg.norm(right) < 1e-12:
            right = np.cross(fwd, [0.0, 1.0, 0.0] if abs(fwd[1]) < 0.9 else [1.0, 0.0, 0.0])
        right /= np.linalg.norm(right)
        up = np.cross(right, fwd)
        return eye, right, up, fwd

    def project(self, points):
        """Screen ``(x, y)`` in pixels and view depth for world points."""
        eye, right, up, fwd = self.view_basis()
        d = np.asarray(points, float) - eye
        depth = d @ fwd
        f = 1.0 / np.tan(self.fov / 2)
        aspect = self.width / self.height
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = f / aspect * (d @ right) / depth
            yn = f * (d @ up) / depth
        sx = (xn + 1) * 0.5 * self.width
        sy = (1 - yn) * 0.5 * self.height
        return np.stack([sx, sy], axis=-1), depth

    @classmethod
    def framing(cls, mesh, width=256, height=256, direction=(1.0, -1.6, 1.2), fov=np.pi / 4):
        lo, hi = mesh.positions.min(axis=0), mesh.positions.max(axis=0)
        center = (lo + hi) / 2
        radius = max(np.linalg.norm(hi - lo) / 2, 1e-6)
        d = np.asarray(direction, float)
        d /= np.linalg.norm(d)
        dist = radius / np.sin(fov / 2) * 1.05
        return cls(tuple(center + d * dist), tuple(center), (0.0, 0.0, 1.0), fov, width, height,
                   near=max(dist - 2 * radius, 1e-3) * 0.5, far=dist + 2 * radius + 1.0)


def _perspective_bary(scr, invz, tri, px, py):
    """Perspective-correct barycentrics of pixel points against triangles ``tri``."""
    a, b, c = scr[tri, 0], scr[tri, 1], scr[tri, 2]
    den = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    l1 = ((px - a[:, 0]) * (c[:, 1] - a[:, 1]) - (py - a[:, 1]) * (c[:, 0] - a[:, 0])) / den
    l2 = ((b[:, 0] - a[:, 0]) * (py - a[:, 1]) - (b[:, 1] - a[:, 1]) * (px - a[:, 0])) / den
    lam = np.stack([1 - l1 - l2, l1, l2], axis=1) * invz[tri]
    return lam / lam.sum(axis=1, keepdims=True)


SHADINGS = ("flat-lit", "albedo", "uv-debug")


def rasterize(mesh: HalfedgeMesh, textures: TextureSet, camera: Camera, shading: str = "flat-lit",
              soup: TriangleSoup | None = None, background=(0, 0, 0)) -> np.ndarray:
    """Z-buffered perspective render; returns an ``(height, width, 3)`` uint8 image.

    Triangles with any corner outside ``[near, far]`` are dropped rather than
    clipped. Texture LOD follows the largest singular value of the pixel's
    ``(u, v)`` Jacobian.
    """
    if shading not in SHADINGS:
        raise ValueError(f"unknown shading {shading!r}; choose from {SHADINGS}")
    W, Hh = camera.width, camera.height
    if W * Hh == 0:
        raise ValueError("zero-area viewport")
    check_fingerprint(mesh, textures)
    soup = soup if soup is not None else tessellate_displaced(mesh, None)
    T = len(soup)
    scr, depth = camera.project(soup.positions.reshape(-1, 3))
    scr = scr.reshape(T, 3, 2)
    depth = depth.reshape(T, 3)
    keep = ((depth >= camera.near) & (depth <= camera.far)).all(axis=1)
    zbuf = np.full((Hh, W), np.inf)
    tid = np.full((Hh, W), -1, dtype=np.int64)
    invz = np.where(keep[:, None], 1.0 / np.where(depth > 0, depth, 1.0), 0.0)

    for t in np.flatnonzero(keep):
        p = scr[t]
        x0 = max(int(np.floor(p[:, 0].min() - 0.5)), 0)
        x1 = min(int(np.ceil(p[:, 0].max() - 0.5)), W - 1)
        y0 = max(int(np.floor(p[:, 1].min() - 0.5)), 0)
        y1 = min(int(np.ceil(p[:, 1].max() - 0.5)), Hh - 1)
        if x0 > x1 or y0 > y1:
            continue
        area = (p[1, 0] - p[0, 0]) * (p[2, 1] - p[0, 1]) - (p[1, 1] - p[0, 1]) * (p[2, 0] - p[0, 0])
        if area == 0:
            continue
        ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
        px, py = xs + 0.5, ys + 0.5
        e0 = (p[2, 0] - p[1, 0]) * (py - p[1, 1]) - (p[2, 1] - p[1, 1]) * (px - p[1, 0])
        e1 = (p[0, 0] - p[2, 0]) * (py - p[2, 1]) - (p[0, 1] - p[2, 1]) * (px - p[2, 0])
        e2 = (p[1, 0] - p[0, 0]) * (py - p[0, 1]) - (p[1, 1] - p[0, 1]) * (px - p[0, 0])
        s = np.sign(area)
        inside = (e0 * s >= 0) & (e1 * s >= 0) & (e2 * s >= 0)
        if not inside.any():
            continue
        lam = np.stack([e0, e1, e2], axis=-1) / area * invz[t]
        z = 1.0 / lam.sum(axis=-1)
        win = inside & (z < zbuf[y0:y1 + 1, x0:x1 + 1])
        zbuf[y0:y1 + 1, x0:x1 + 1][win] = z[win]
        tid[y0:y1 + 1, x0:x1 + 1][win] = t

    img = np.empty((Hh, W, 3))
    img[:] = np.asarray(background, float) / 255.0
    rows, cols = np.nonzero(tid >= 0)
    if len(rows):
        tri = tid[rows, cols]
        px, py = cols + 0.5, rows + 0.5
        uv = soup.params
        lam = _perspective_bary(scr, invz, tri, px, py)
        u = (lam[:, :, None] * uv[tri]).sum(axis=1)
        ux = (_perspective_bary(scr, invz, tri, px + 1, py)[:, :, None] * uv[tri]).sum(axis=1) - u
        uy = (_perspective_bary(scr, invz, tri, px, py + 1)[:, :, None] * uv[tri]).sum(axis=1) - u
        jac = np.stack([ux, uy], axis=2)
        footprint = np.linalg.svd(jac, compute_uv=False)[:, 0]
        h = soup.halfedge[tri]
        uu = np.clip(u[:, 0], 0.0, 1.0)
        vv = np.clip(u[:, 1], 0.0, 1.0 - uu)
        img[rows, cols] = _shade(mesh, textures, camera, soup, shading, tri, h, uu, vv, footprint)
    return np.round(np.clip(img, 0, 1) * 255).astype(np.uint8)


def _shade(mesh, textures, camera, soup, shading, tri, h, u, v, footprint):
    if shading == "uv-debug":
        x, y = triangle_to_quad_uv(mesh, h, u, v)
        return np.stack([x, y, 0.25 + 0.5 * (mesh.edge_ids[h] % 2)], axis=1)
    c = htexture(mesh, textures, h, u, v, LodSelector.derivative(footprint)).channels
    albedo = c[:, :3] if c.shape[1] >= 3 else np.repeat(c[:, :1], 3, axis=1)
    if shading == "albedo":
        return albedo
    p = soup.positions[tri]
    n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    n /= np.maximum(np.linalg.norm(n, axis=1, keepdims=True), 1e-300)
    _, _, _, fwd = camera.view_basis()
    return albedo * (0.15 + 0.85 * np.abs(n @ fwd))[:, None]


def save_image(image, path):
    """Write a uint8 image; the format follows the suffix (.ppm or .png)."""
    from PIL import Image

    Image.fromarray(np.asarray(image, dtype=np.uint8), "RGB").save(path)


# -- validators ---------------------------------------------------------------------


@dataclass
class SeamReport:
    """Largest per-channel discrepancy across every spoke and quad diagonal.

    ``spokes[h]`` compares triangle ``h`` with ``next(h)``; ``diagonals[e]``
    compares the two halves of quad ``e`` (NaN on boundary edges).
    """

    spokes: np.ndarray
    diagonals: np.ndarray
    max_discrepancy: float
    halfedge: int
    t: float
    kind: str
    edge_of_halfedge: np.ndarray = field(repr=False, default=None)

    def per_edge(self):
        out = []
        for e in range(len(self.diagonals)):
            hs = np.flatnonzero(self.edge_of_halfedge == e)
            d = self.diagonals[e]
            out.append({"edge": e, "diagonal": None if np.isnan(d) else float(d),
                        "spoke": float(self.spokes[hs].max()) if len(hs) else 0.0})
        return out

    def to_dict(self):
        return {"max_discrepancy": float(self.max_discrepancy),
                "location": {"halfedge": int(self.halfedge), "t": float(self.t), "kind": self.kind},
                "per_edge": self.per_edge()}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self):
        return (f"seams: max discrepancy {self.max_discrepancy:.3e} at {self.kind} of halfedge "
                f"{self.halfedge}, t={self.t:.4f}")


@dataclass
class CrackReport:
    max_discrepancy: float
    halfedge: int
    t: float
    kind: str
    position: tuple
    uniform_resolution: bool
    per_edge: list = field(default_factory=list)

    def to_dict(self):
        return {"max_discrepancy": float(self.max_discrepancy),
                "location": {"halfedge": int(self.halfedge), "t": float(self.t), "kind": self.kind,
                             "position": [float(c) for c in self.position]},
                "uniform_resolution": self.uniform_resolution,
                "per_edge": self.per_edge}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    def to_text(self):
        return (f"cracks: max displaced gap {self.max_discrepancy:.3e} at {self.kind} of halfedge "
                f"{self.halfedge}, t={self.t:.4f}")


def _shared_sides(mesh, t, rest):
    """Matched barycentrics along every spoke and interior diagonal.

    ``t`` runs along each side and ``rest`` must equal ``1 - t`` (passed in
    so callers control rounding). Returns, per kind, the halfedge pairs
    ``(a, b)``, each side's ``(u, v, w)`` and ``t``.
    """
    m = len(t)
    H = mesh.H
    a = np.repeat(np.arange(H), m)
    tt, rr = np.tile(t, H), np.tile(rest, H)
    z = np.zeros_like(tt)
    spoke = (a, mesh.next_ids[a], (z, tt, rr), (tt, z, rr), tt)

    owners = np.flatnonzero(mesh.twin_ids > np.arange(H))
    a2 = np.repeat(owners, m)
    t2, r2 = np.tile(t, len(owners)), np.tile(rest, len(owners))
    z2 = np.zeros_like(t2)
    diag = (a2, mesh.twin_ids[a2], (t2, r2, z2), (r2, t2, z2), t2)
    return spoke, diag


def seam_check(mesh: HalfedgeMesh, textures: TextureSet, samples_per_edge: int = 17,
               lod: LodSelector | None = None, rng: np.random.Generator | None = None) -> SeamReport:
    """Sample both triangles adjacent to each spoke/diagonal at matched points.

    Points are evenly spaced including both ends, or drawn from ``rng``
    (endpoints still included) when one is given.
    """
    check_fingerprint(mesh, textures)
    m = max(int(samples_per_edge), 2)
    if rng is None:
        t = np.linspace(0.0, 1.0, m)
    else:
        t = np.concatenate([[0.0], np.sort(rng.uniform(0.0, 1.0, m - 2)), [1.0]])
    spoke, diag = _shared_sides(mesh, t, 1.0 - t)
    spokes = np.zeros(mesh.H)
    diagonals = np.full(mesh.E, np.nan)
    best = (0.0, 0, 0.0, "spoke")
    for kind, (a, b, ba, bb, t) in (("spoke", spoke), ("diagonal", diag)):
        if len(a) == 0:
            continue
        ca = htexture(mesh, textures, a, ba[0], ba[1], lod).channels
        cb = htexture(mesh, textures, b, bb[0], bb[1], lod).channels
        d = np.abs(ca - cb).max(axis=1)
        if kind == "spoke":
            np.maximum.at(spokes, a, d)
        else:
            e = mesh.edge_ids[a]
            diagonals[np.unique(e)] = 0.0
            np.maximum.at(diagonals, e, d)
        k = int(np.argmax(d))
        if d[k] > best[0]:
            best = (float(d[k]), int(a[k]), float(t[k]), kind)
    return SeamReport(spokes, diagonals, best[0], best[1], best[2], best[3], mesh.edge_ids)


def crack_check(mesh: HalfedgeMesh, textures: TextureSet, channel: int = 0, level: int = 3,
                scale: float = 1.0, bias: float = 0.0, warn: bool = True) -> CrackReport:
    """Compare displaced sub-vertices of adjacent triangles along every shared side."""
    check_fingerprint(mesh, textures)
    n = 2 ** int(level)
    k = np.arange(n + 1)
    vn, fn = vertex_normals(mesh), face_normals(mesh)
    spoke, diag = _shared_sides(mesh, k / n, (n - k) / n)
    best = (0.0, 0, 0.0, "spoke", (0.0, 0.0, 0.0))
    per_edge = np.zeros(mesh.E)
    for kind, (a, b, ba, bb, t) in (("spoke", spoke), ("diagonal", diag)):
        if len(a) == 0:
            continue
        pa, _ = displace(mesh, textures, channel, a, *ba, scale, bias, vn, fn)
        pb, _ = displace(mesh, textures, channel, b, *bb, scale, bias, vn, fn)
        d = np.linalg.norm(pa - pb, axis=1)
        np.maximum.at(per_edge, mesh.edge_ids[a], d)
        k = int(np.argmax(d))
        if d[k] > best[0]:
            best = (float(d[k]), int(a[k]), float(t[k]), kind, tuple(pa[k]))
    uniform = textures.is_uniform()
    report = CrackReport(best[0], best[1], best[2], best[3], best[4], uniform,
                         [{"edge": e, "max": float(v)} for e, v in enumerate(per_edge)])
    if warn and not uniform:
        warnings.warn(f"mixed texture resolutions: {report.to_text()}", CrackWarning, stacklevel=2)
    return report
