"""Intrinsic triangles and quads spanned by halfedges.

Halfedge ``h`` spans the triangle ``(v0, v1, v2)`` with ``v0 = vert(next(h))``,
``v1`` the centroid of its face and ``v2 = vert(h)``. Barycentric ``(u, v, w)``
weight ``v2``, ``v0`` and ``v1`` respectively.

A halfedge and its twin share one quad (indexed by their edge). The halfedge
with the larger id owns the lower-left half ``x + y <= 1`` of the quad's unit
square with ``(x, y) = (u, v)``; the other one is mapped by ``(1 - u, 1 - v)``.
"""
from dataclasses import dataclass

import numpy as np

from .halfedge import BOUNDARY, HalfedgeMesh


@dataclass(frozen=True)
class IntrinsicTriangle:
    halfedge: int
    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def point(self, u, v, w=None):
        if w is None:
            w = 1.0 - u - v
        return u * self.v2 + v * self.v0 + w * self.v1

    def area(self):
        return 0.5 * np.linalg.norm(np.cross(self.v0 - self.v1, self.v2 - self.v1))


def intrinsic_triangle_vertices(mesh: HalfedgeMesh, h: int) -> IntrinsicTriangle:
    """Vertices of the triangle spanned by ``h``, walking its face once."""
    nxt = int(mesh.next(h))
    v0 = mesh.positions[mesh.vert(nxt)]
    v2 = mesh.positions[mesh.vert(h)]
    v1 = v2.copy()
    n = 1
    k = nxt
    while k != h:
        v1 += mesh.positions[mesh.vert(k)]
        n += 1
        k = int(mesh.next(k))
    return IntrinsicTriangle(int(h), v0, v1 / n, v2)


def triangle_vertices(mesh: HalfedgeMesh, h=None):
    """Vectorized ``(v0, v1, v2)`` arrays for many halfedges (all by default)."""
    if h is None:
        h = np.arange(mesh.H)
    h = np.asarray(h)
    v0 = mesh.positions[mesh.vert_ids[mesh.next_ids[h]]]
    v1 = mesh.face_centroids[mesh.face_ids[h]]
    v2 = mesh.positions[mesh.vert_ids[h]]
    return v0, v1, v2


def barycentric_point(v0, v1, v2, u, v, w=None):
    u = np.asarray(u, dtype=float)[..., None]
    v = np.asarray(v, dtype=float)[..., None]
    w = 1.0 - u - v if w is None else np.asarray(w, dtype=float)[..., None]
    return u * v2 + v * v0 + w * v1


def owns_lower_half(mesh: HalfedgeMesh, h):
    """True where ``h`` has a larger id than its twin (always true on boundaries)."""
    h = np.asarray(h)
    return h > mesh.twin_ids[h]


def triangle_to_quad_uv(mesh: HalfedgeMesh, h, u, v):
    """Map barycentrics of ``h``'s triangle to its quad's texture coordinates.

    Coordinates outside the triangle are passed through unchanged so that
    reflected neighbour coordinates land outside the quad.
    """
    if np.ndim(h) == 0:
        mesh._check(h)
        if h > mesh.twin_ids[h]:
            return u, v
        return 1.0 - u, 1.0 - v
    keep = owns_lower_half(mesh, h)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.where(keep, u, 1.0 - u), np.where(keep, v, 1.0 - v)


def quad_of_halfedge(mesh: HalfedgeMesh, h):
    return mesh.edge(h)


def quad_uv_to_surface_point(mesh: HalfedgeMesh, e, x, y):
    """Inverse parameterization: quad coordinates of edge ``e`` to a 3D point.

    On boundary edges the missing upper half mirrors the lower one through
    ``(1 - x, 1 - y)``.
    """
    pts, _, _ = quad_uv_to_barycentric(mesh, e, x, y)
    return pts


def quad_uv_to_barycentric(mesh: HalfedgeMesh, e, x, y):
    """Return ``(points, halfedges, (u, v, w))`` for quad coordinates."""
    scalar = np.ndim(e) == 0 and np.ndim(x) == 0 and np.ndim(y) == 0
    e, x, y = np.broadcast_arrays(np.asarray(e), np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if not ((x >= 0) & (x <= 1) & (y >= 0) & (y <= 1)).all():
        raise ValueError("quad coordinates must lie in [0, 1]^2")
    if ((e < 0) | (e >= mesh.E)).any():
        raise ValueError(f"edge index out of range [0, {mesh.E})")
    owner = mesh.edge_owner[e]
    other = mesh.twin_ids[owner]
    upper = x + y > 1
    h = np.where(upper & (other != BOUNDARY), other, owner)
    u = np.where(upper, 1.0 - x, x)
    v = np.where(upper, 1.0 - y, y)
    w = np.where(upper, x + y - 1.0, 1.0 - x - y)
    v0, v1, v2 = triangle_vertices(mesh, h)
    pts = barycentric_point(v0, v1, v2, u, v, w)
    if scalar:
        return pts.reshape(3), int(h), (float(u), float(v), float(w))
    return pts, h, (u, v, w)
