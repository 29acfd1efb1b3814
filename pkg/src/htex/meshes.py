"""Small procedural meshes used as fixtures by the tests and the CLI."""
import numpy as np

from .halfedge import HalfedgeMesh


def _orient_outward(positions, faces):
    """Flip faces of a star-shaped-around-origin mesh so normals point outward."""
    out = []
    for poly in faces:
        p = positions[poly]
        c = p.mean(axis=0)
        n = np.cross(p - c, np.roll(p, -1, axis=0) - c).sum(axis=0)
        out.append(list(poly) if n @ c > 0 else list(poly)[::-1])
    return out


def single_triangle():
    return HalfedgeMesh.from_polygons([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


def unit_square():
    return HalfedgeMesh.from_polygons([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], [[0, 1, 2, 3]])


def cube(size=1.0):
    """Axis-aligned cube spanning ``[0, size]^3`` (8 vertices, 6 quads)."""
    p = np.array([[x, y, z] for z in (0, 1) for y in (0, 1) for x in (0, 1)], dtype=float) * size
    faces = [
        [0, 2, 3, 1],  # z = 0
        [4, 5, 7, 6],  # z = 1
        [0, 1, 5, 4],  # y = 0
        [2, 6, 7, 3],  # y = 1
        [0, 4, 6, 2],  # x = 0
        [1, 3, 7, 5],  # x = 1
    ]
    return HalfedgeMesh.from_polygons(p, faces)


def icosphere(subdivisions=1, radius=1.0):
    t = (1 + 5 ** 0.5) / 2
    p = [
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ]
    faces = [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
    p = [list(np.asarray(q, float) / np.linalg.norm(q)) for q in p]
    for _ in range(subdivisions):
        mid = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in mid:
                m = (np.asarray(p[a]) + np.asarray(p[b])) / 2
                p.append(list(m / np.linalg.norm(m)))
                mid[key] = len(p) - 1
            return mid[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new
    return HalfedgeMesh.from_polygons(np.asarray(p) * radius, faces)


def torus(n_major=8, n_minor=6, major=1.0, minor=0.35):
    """Quad torus around the z axis (genus 1)."""
    p = []
    for i in range(n_major):
        a = 2 * np.pi * i / n_major
        for j in range(n_minor):
            b = 2 * np.pi * j / n_minor
            r = major + minor * np.cos(b)
            p.append([r * np.cos(a), r * np.sin(a), minor * np.sin(b)])
    idx = lambda i, j: (i % n_major) * n_minor + (j % n_minor)
    faces = [[idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]
             for i in range(n_major) for j in range(n_minor)]
    return HalfedgeMesh.from_polygons(p, faces)


def mixed_polygons():
    """Planar quad + triangle + pentagon patch with 12 halfedges.

    Halfedges 0-3 belong to the quad, 4-6 to the triangle and 7-11 to the
    pentagon. Halfedge 7 is the twin of halfedge 1 (both map to edge 4) and
    halfedge 4 lies on the boundary (edge 2), with prev(4) = 6, next(4) = 5.
    """
    p = [
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [1.0, 1.0, 0.0],
        [2.0, -0.2, 0.0],
        [2.5, 0.6, 0.0],
        [2.0, 1.3, 0.0],
    ]
    faces = [[1, 2, 3, 0], [6, 0, 3], [3, 2, 4, 5, 6]]
    return HalfedgeMesh.from_polygons(p, faces)


def truncated_tetrahedron():
    """Closed mesh with 4 triangles and 4 hexagons."""
    tet = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    ids = {}
    pts = []
    for i in range(4):
        for j in range(4):
            if i != j:
                ids[i, j] = len(pts)
                pts.append(tet[i] + (tet[j] - tet[i]) / 3)
    faces = []
    for i in range(4):
        others = [j for j in range(4) if j != i]
        faces.append([ids[i, j] for j in others])
    for a, b, c in ([0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]):
        faces.append([ids[a, b], ids[b, a], ids[b, c], ids[c, b], ids[c, a], ids[a, c]])
    pts = np.asarray(pts)
    return HalfedgeMesh.from_polygons(pts, _orient_outward(pts, faces))


def grid(nx=3, ny=2):
    """Open planar quad grid in the z = 0 plane."""
    p = [[x, y, 0.0] for y in range(ny + 1) for x in range(nx + 1)]
    idx = lambda x, y: y * (nx + 1) + x
    faces = [[idx(x, y), idx(x + 1, y), idx(x + 1, y + 1), idx(x, y + 1)] for y in range(ny) for x in range(nx)]
    return HalfedgeMesh.from_polygons(p, faces)


def nonmanifold_fin():
    """Three triangles sharing edge (0, 1); not loadable in strict mode."""
    p = [[0, 0, 0], [1, 0, 0], [0.5, 1, 0], [0.5, -1, 0], [0.5, 0, 1]]
    faces = [[0, 1, 2], [1, 0, 3], [0, 1, 4]]
    return p, faces


FIXTURES = {
    "triangle": single_triangle,
    "square": unit_square,
    "cube": cube,
    "icosphere": icosphere,
    "torus": torus,
    "mixed": mixed_polygons,
    "truncated_tetrahedron": truncated_tetrahedron,
    "grid": grid,
}
