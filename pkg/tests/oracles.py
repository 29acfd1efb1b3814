"""Brute-force references that share no code with the library's fast paths."""
import numpy as np


def tent(coord, side):
    """Bilinear weight of every texel along one axis: max(0, 1 - |coord*side - centre|)."""
    centres = np.arange(side) + 0.5
    return np.maximum(0.0, 1.0 - np.abs(coord * side - centres))


def htexture_bruteforce(mesh, textures, h, u, v, level=0):
    """Enumerate every texel of the three quads with explicit tent weights.

    Returns ``(channels, n_fetches, n_nonzero_taps)``.
    """
    twin = mesh.twin_ids
    n = textures.layout.n
    acc = np.zeros(n + 1)
    taps = 0
    fetches = 0
    neighbours = [(h, u, v), (mesh.next_ids[h], v, -u), (mesh.prev_ids[h], -v, u)]
    for g, a, b in neighbours:
        if g > twin[g]:
            x, y = a, b
        else:
            x, y = 1.0 - a, 1.0 - b
        tex = textures[mesh.edge_ids[g]]
        img = tex.levels[min(level, tex.log2_res)].astype(np.float64)
        side = img.shape[0]
        wx, wy = tent(x, side), tent(y, side)
        fetches += 1
        for j in range(side):
            for i in range(side):
                wgt = wx[i] * wy[j]
                if wgt > 0:
                    acc += wgt * img[j, i]
                    taps += 1
    return acc[:n] / acc[n], fetches, taps


def polygon_area(points):
    """Area of a planar polygon in 3D by fan triangulation from its first vertex."""
    p = np.asarray(points, float)
    total = np.zeros(3)
    for i in range(1, len(p) - 1):
        total += np.cross(p[i] - p[0], p[i + 1] - p[0])
    return 0.5 * np.linalg.norm(total)
