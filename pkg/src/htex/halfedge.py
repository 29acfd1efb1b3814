"""Directed-edge halfedge mesh.

Every halfedge ``h`` stores six integers: ``twin``, ``next``, ``prev``,
``vert`` (its origin vertex), ``edge`` and ``face``. A missing twin is encoded
as ``-1`` so that integer comparisons against a boundary twin always favour
the existing halfedge.

Halfedges are numbered face by face, in the order faces and face corners
appear in the input, so halfedge ``h`` runs from ``vert(h)`` to
``vert(next(h))``. Edges are numbered by sorting the unordered vertex pairs.
"""
from __future__ import annotations

import hashlib
import io
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateGeometryError, MeshError

BOUNDARY = -1

__all__ = [
    "BOUNDARY",
    "Fingerprint",
    "HalfedgeMesh",
    "Violation",
    "face_normals",
    "load_obj",
    "save_obj",
    "validate",
    "vertex_normals",
]


@dataclass(frozen=True)
class Fingerprint:
    """Identity of a mesh topology, stored in .htx files."""

    H: int
    V: int
    E: int
    F: int
    B: int
    digest: bytes

    def counts(self):
        return (self.H, self.V, self.E, self.F, self.B)


@dataclass(frozen=True)
class Violation:
    invariant: str
    element: str
    index: int
    detail: str = ""

    def __str__(self):
        msg = f"{self.invariant}: {self.element} {self.index}"
        return f"{msg} ({self.detail})" if self.detail else msg


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class HalfedgeMesh:
    """Immutable halfedge mesh stored as flat integer arrays.

    Use :meth:`from_polygons` or :func:`load_obj` to build one; the raw
    constructor performs no checks so that :func:`validate` can be exercised
    on deliberately broken arrays.
    """

    twin_ids: np.ndarray
    next_ids: np.ndarray
    prev_ids: np.ndarray
    vert_ids: np.ndarray
    edge_ids: np.ndarray
    face_ids: np.ndarray
    positions: np.ndarray
    n_edges: int = field(default=-1)

    def __post_init__(self):
        for name in ("twin_ids", "next_ids", "prev_ids", "vert_ids", "edge_ids", "face_ids"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.int64))
        object.__setattr__(self, "positions", _frozen(self.positions, np.float64).reshape(-1, 3))
        if self.n_edges < 0:
            n = int(self.edge_ids.max()) + 1 if len(self.edge_ids) else 0
            object.__setattr__(self, "n_edges", n)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_polygons(cls, positions, faces: Sequence[Sequence[int]], strict: bool = True):
        """Build a mesh from 0-based polygon index lists.

        With ``strict=False`` topology errors are not raised; twins are only
        linked for properly opposed halfedge pairs and the resulting mesh can
        be inspected with :func:`validate`.
        """
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        nv = len(positions)
        vert, nxt, prv, fid = [], [], [], []
        for f, poly in enumerate(faces):
            poly = [int(i) for i in poly]
            if strict:
                if len(poly) < 3:
                    raise MeshError(f"face {f} has {len(poly)} vertices (need at least 3)")
                if len(set(poly)) != len(poly):
                    raise MeshError(f"face {f} repeats a vertex: {poly}")
            for i in poly:
                if not 0 <= i < nv:
                    raise MeshError(f"face {f} references vertex {i} out of range [0, {nv})")
            base = len(vert)
            k = len(poly)
            for i, v in enumerate(poly):
                vert.append(v)
                nxt.append(base + (i + 1) % k)
                prv.append(base + (i - 1) % k)
                fid.append(f)
        vert = np.asarray(vert, dtype=np.int64)
        nxt = np.asarray(nxt, dtype=np.int64)
        prv = np.asarray(prv, dtype=np.int64)
        H = len(vert)

        directed: dict[tuple[int, int], list[int]] = {}
        for h in range(H):
            directed.setdefault((int(vert[h]), int(vert[nxt[h]])), []).append(h)
        pairs = sorted({(min(k), max(k)) for k in directed})
        edge_of_pair = {p: e for e, p in enumerate(pairs)}

        twin = np.full(H, BOUNDARY, dtype=np.int64)
        edge = np.empty(H, dtype=np.int64)
        for (a, b), hs in directed.items():
            for h in hs:
                edge[h] = edge_of_pair[(min(a, b), max(a, b))]
            opposite = directed.get((b, a), [])
            if len(hs) == 1 and len(opposite) == 1:
                twin[hs[0]] = opposite[0]

        if strict:
            used = np.zeros(nv, dtype=bool)
            used[vert] = True
            if not used.all():
                raise MeshError(f"isolated vertex {int(np.flatnonzero(~used)[0])} is not used by any face")

        mesh = cls(twin, nxt, prv, vert, edge, np.asarray(fid, dtype=np.int64), positions, len(pairs))
        if strict:
            problems = validate(mesh)
            if problems:
                raise MeshError(f"invalid mesh: {problems[0]}", problems)
        return mesh

    # -- counts -------------------------------------------------------------

    @property
    def H(self) -> int:
        return len(self.vert_ids)

    @property
    def V(self) -> int:
        return len(self.positions)

    @property
    def E(self) -> int:
        return self.n_edges

    @cached_property
    def F(self) -> int:
        return int(self.face_ids.max()) + 1 if self.H else 0

    @cached_property
    def B(self) -> int:
        return int(np.count_nonzero(self.twin_ids == BOUNDARY))

    def euler_characteristic(self) -> int:
        return self.V - self.E + self.F

    # -- operators ----------------------------------------------------------

    def _check(self, h):
        if np.ndim(h) == 0:
            assert 0 <= h < self.H, f"halfedge {h} out of range [0, {self.H})"

    def twin(self, h):
        self._check(h)
        return self.twin_ids[h]

    def next(self, h):
        self._check(h)
        return self.next_ids[h]

    def prev(self, h):
        self._check(h)
        return self.prev_ids[h]

    def vert(self, h):
        self._check(h)
        return self.vert_ids[h]

    def edge(self, h):
        self._check(h)
        return self.edge_ids[h]

    def face(self, h):
        self._check(h)
        return self.face_ids[h]

    # -- derived data -------------------------------------------------------

    @cached_property
    def face_sizes(self) -> np.ndarray:
        return np.bincount(self.face_ids, minlength=self.F)

    @cached_property
    def face_centroids(self) -> np.ndarray:
        acc = np.zeros((self.F, 3))
        np.add.at(acc, self.face_ids, self.positions[self.vert_ids])
        return acc / self.face_sizes[:, None]

    @cached_property
    def edge_owner(self) -> np.ndarray:
        """For each edge, the incident halfedge with the larger id."""
        owner = np.full(self.E, BOUNDARY, dtype=np.int64)
        np.maximum.at(owner, self.edge_ids, np.arange(self.H))
        return owner

    def polygons(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.F)]
        for h in range(self.H):
            out[self.face_ids[h]].append(int(self.vert_ids[h]))
        return out

    @cached_property
    def fingerprint(self) -> Fingerprint:
        sha = hashlib.sha256()
        for a in (self.twin_ids, self.next_ids, self.prev_ids, self.vert_ids, self.edge_ids, self.face_ids):
            sha.update(a.astype("<i4").tobytes())
        return Fingerprint(self.H, self.V, self.E, self.F, self.B, sha.digest())


# -- validation --------------------------------------------------------------


def validate(mesh: HalfedgeMesh) -> list[Violation]:
    """Check every structural invariant; an empty list means the mesh is sound."""
    out: list[Violation] = []
    H = mesh.H
    twin, nxt, prv = mesh.twin_ids, mesh.next_ids, mesh.prev_ids
    vert, edge, face = mesh.vert_ids, mesh.edge_ids, mesh.face_ids

    for name, arr in (("next", nxt), ("prev", prv)):
        bad = np.flatnonzero((arr < 0) | (arr >= H))
        out += [Violation("range", f"{name} of halfedge", int(h)) for h in bad]
    bad = np.flatnonzero((twin < BOUNDARY) | (twin >= H))
    out += [Violation("range", "twin of halfedge", int(h)) for h in bad]
    bad = np.flatnonzero((vert < 0) | (vert >= mesh.V))
    out += [Violation("range", "vert of halfedge", int(h)) for h in bad]
    if out:
        return out

    for h in np.flatnonzero(twin != BOUNDARY):
        t = twin[h]
        if twin[t] != h:
            out.append(Violation("twin involution", "halfedge", int(h), f"twin(twin(h)) = {int(twin[t])}"))
        elif edge[t] != edge[h]:
            out.append(Violation("twin edge", "halfedge", int(h), f"edge {int(edge[h])} vs {int(edge[t])}"))
        elif vert[t] != vert[nxt[h]]:
            out.append(Violation("twin orientation", "halfedge", int(h)))
    for h in np.flatnonzero(nxt[prv] != np.arange(H)):
        out.append(Violation("next/prev inverse", "halfedge", int(h), "next(prev(h)) != h"))
    for h in np.flatnonzero(prv[nxt] != np.arange(H)):
        out.append(Violation("next/prev inverse", "halfedge", int(h), "prev(next(h)) != h"))

    seen = np.zeros(H, dtype=bool)
    for h0 in range(H):
        if seen[h0]:
            continue
        h, n = h0, 0
        while True:
            seen[h] = True
            if face[h] != face[h0]:
                out.append(Violation("face cycle", "halfedge", int(h), f"face {int(face[h])} != {int(face[h0])}"))
                break
            h = int(nxt[h])
            n += 1
            if h == h0 or n > H:
                break
        if h != h0:
            out.append(Violation("face cycle", "halfedge", h0, "next cycle does not close"))
        elif n < 3:
            out.append(Violation("face cycle", "face", int(face[h0]), f"only {n} sides"))

    if mesh.E != (int(edge.max()) + 1 if H else 0) or (edge < 0).any():
        out.append(Violation("edge surjection", "mesh", 0, f"E={mesh.E}"))
    mult = np.bincount(edge[edge >= 0], minlength=mesh.E)
    for e in np.flatnonzero(mult == 0):
        out.append(Violation("edge surjection", "edge", int(e), "no halfedge"))
    for e in np.flatnonzero(mult > 2):
        out.append(Violation("non-manifold edge", "edge", int(e), f"{int(mult[e])} halfedges"))
    for e in np.flatnonzero(mult == 2):
        hs = np.flatnonzero(edge == e)
        if twin[hs[0]] != hs[1]:
            same = vert[hs[0]] == vert[hs[1]]
            detail = "same direction in two faces" if same else "unlinked twins"
            name = "inconsistent winding" if same else "twin link"
            out.append(Violation(name, "edge", int(e), detail))
    for e in np.flatnonzero(mult == 1):
        h = np.flatnonzero(edge == e)[0]
        if twin[h] != BOUNDARY:
            out.append(Violation("boundary edge", "edge", int(e), "single halfedge with a twin"))

    if not out and H != 2 * mesh.E - mesh.B:
        out.append(Violation("counting", "mesh", 0, f"H={H} != 2E-B={2 * mesh.E - mesh.B}"))
    if not out:
        out += _vertex_fans(mesh)
    return out


def _vertex_fans(mesh):
    """Each vertex must be reached by a single fan of outgoing halfedges."""
    out = []
    outgoing = np.bincount(mesh.vert_ids, minlength=mesh.V)
    for v in np.flatnonzero(outgoing == 0):
        out.append(Violation("isolated vertex", "vertex", int(v)))
    first = {}
    for h in range(mesh.H):
        first.setdefault(int(mesh.vert_ids[h]), h)
    for v, h0 in first.items():
        # rewind clockwise to a boundary (if any), then count the fan
        h, steps = h0, 0
        while mesh.twin_ids[mesh.prev_ids[h]] != BOUNDARY and steps <= mesh.H:
            h = int(mesh.twin_ids[mesh.prev_ids[h]])
            steps += 1
            if h == h0:
                break
        start, count = h, 0
        while True:
            count += 1
            t = mesh.twin_ids[h]
            if t == BOUNDARY:
                break
            h = int(mesh.next_ids[t])
            if h == start or count > mesh.H:
                break
        if count != outgoing[v]:
            out.append(Violation("non-manifold vertex", "vertex", v, f"fan of {count} of {int(outgoing[v])} halfedges"))
    return out


# -- normals -----------------------------------------------------------------


def face_normals(mesh: HalfedgeMesh, normalize: bool = True) -> np.ndarray:
    """Newell normals per face; unnormalized length is twice the vector area."""
    p = mesh.positions[mesh.vert_ids] - mesh.face_centroids[mesh.face_ids]
    q = mesh.positions[mesh.vert_ids[mesh.next_ids]] - mesh.face_centroids[mesh.face_ids]
    acc = np.zeros((mesh.F, 3))
    np.add.at(acc, mesh.face_ids, np.cross(p, q))
    if not normalize:
        return acc
    norm = np.linalg.norm(acc, axis=1)
    if (norm == 0).any():
        raise DegenerateGeometryError(f"face {int(np.flatnonzero(norm == 0)[0])} has zero area")
    return acc / norm[:, None]


def vertex_normals(mesh: HalfedgeMesh) -> np.ndarray:
    """Area-weighted average of incident face normals, per vertex."""
    area_vec = face_normals(mesh, normalize=False)
    acc = np.zeros((mesh.V, 3))
    np.add.at(acc, mesh.vert_ids, area_vec[mesh.face_ids])
    norm = np.linalg.norm(acc, axis=1)
    scale = max(float(np.abs(mesh.positions).max(initial=0.0)), 1.0)
    bad = np.flatnonzero(norm <= 1e-14 * scale * scale)
    if len(bad):
        raise DegenerateGeometryError(f"vertex {int(bad[0])} has a zero-magnitude accumulated normal")
    return acc / norm[:, None]


# -- OBJ ---------------------------------------------------------------------


def _parse_obj(text: str):
    positions, faces = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            try:
                xyz = [float(s) for s in parts[1:4]]
            except ValueError:
                raise MeshError(f"line {lineno}: bad vertex record {raw!r}") from None
            if len(xyz) != 3:
                raise MeshError(f"line {lineno}: vertex needs 3 coordinates")
            positions.append(xyz)
        elif tag == "f":
            poly = []
            for tok in parts[1:]:
                try:
                    idx = int(tok.split("/", 1)[0])
                except ValueError:
                    raise MeshError(f"line {lineno}: bad face index {tok!r}") from None
                if idx == 0:
                    raise MeshError(f"line {lineno}: OBJ indices are 1-based")
                idx = idx - 1 if idx > 0 else len(positions) + idx
                if not 0 <= idx < len(positions):
                    raise MeshError(f"line {lineno}: face index {tok} out of range")
                poly.append(idx)
            if len(poly) < 3:
                raise MeshError(f"line {lineno}: face needs at least 3 vertices")
            faces.append(poly)
    if not faces:
        raise MeshError("OBJ contains no faces")
    return np.asarray(positions, dtype=np.float64), faces


def load_obj(source, strict: bool = True) -> HalfedgeMesh:
    """Read a polygon OBJ from a path, text, bytes or binary/text stream.

    Only ``v`` and ``f`` records are used; texture coordinates and normals
    are ignored.
    """
    if isinstance(source, (str, os.PathLike)) and not (isinstance(source, str) and "\n" in source):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, str):
        data = source.encode()
    else:
        data = source.read()
    text = data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data
    positions, faces = _parse_obj(text)
    return HalfedgeMesh.from_polygons(positions, faces, strict=strict)


def save_obj(mesh_or_positions, faces: Iterable[Sequence[int]] | None = None, sink=None) -> str:
    """Serialize to OBJ text; writes to ``sink`` (path or stream) when given."""
    if faces is None:
        positions, faces = mesh_or_positions.positions, mesh_or_positions.polygons()
    else:
        positions = np.asarray(mesh_or_positions, dtype=np.float64)
    buf = io.StringIO()
    for p in positions:
        buf.write("v {!r} {!r} {!r}\n".format(*map(float, p)))
    for poly in faces:
        buf.write("f " + " ".join(str(int(i) + 1) for i in poly) + "\n")
    text = buf.getvalue()
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w") as fh:
            fh.write(text)
    elif sink is not None:
        sink.write(text)
    return text
