"""Input checks shared by the estimator, the CLI and library entry points."""
import os

import numpy as np
from sklearn.utils.validation import check_array

from .errors import MeshError
from .halfedge import HalfedgeMesh, load_obj, validate


def check_mesh(mesh) -> HalfedgeMesh:
    """Accept a mesh, an OBJ path or OBJ text; return a validated mesh."""
    if isinstance(mesh, HalfedgeMesh):
        problems = validate(mesh)
        if problems:
            raise MeshError(f"invalid mesh: {problems[0]}", problems)
        return mesh
    if isinstance(mesh, (str, bytes, os.PathLike)):
        return load_obj(mesh)
    raise TypeError(f"expected a HalfedgeMesh or OBJ source, got {type(mesh).__name__}")


def check_queries(X, mesh: HalfedgeMesh, atol=1e-9):
    """Split an ``(n, 3)`` array of ``[halfedge, u, v]`` rows into checked columns.

    ``u`` and ``v`` must be barycentrics inside the halfedge's triangle.
    """
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    if X.shape[1] != 3:
        raise ValueError(f"queries need 3 columns [halfedge, u, v], got {X.shape[1]}")
    h = X[:, 0]
    if not np.array_equal(h, np.round(h)):
        raise ValueError("halfedge column must hold integers")
    h = h.astype(np.int64)
    if ((h < 0) | (h >= mesh.H)).any():
        raise ValueError(f"halfedge ids must lie in [0, {mesh.H})")
    u, v = X[:, 1], X[:, 2]
    if (u < -atol).any() or (v < -atol).any() or (u + v > 1 + atol).any():
        raise ValueError("(u, v) must satisfy u >= 0, v >= 0, u + v <= 1")
    return h, np.clip(u, 0.0, 1.0), np.clip(v, 0.0, 1.0)
