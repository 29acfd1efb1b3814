"""One square, mip-mapped texture per mesh edge, and the ``.htx`` container.

Layout (little-endian)::

    header       4s magic "HTEX", u32 version, u32 E, u32 reserved (0)
    fingerprint  u32 H, V, E, F, B; 32-byte SHA-256 of the halfedge arrays
    channels     u32 n; n x (u16 byte length, UTF-8 name)
    resolutions  E x u8 log2 side length
    payload      f32 texels; edges ascending, levels fine to coarse,
                 rows top to bottom, n + 1 channels interleaved

The last stored channel is the border-normalization channel (all ones).
"""
from __future__ import annotations

import io
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, UnsupportedVersionError
from .halfedge import Fingerprint

MAGIC = b"HTEX"
VERSION = 1
MAX_LOG2_RES = 12

_HEADER = struct.Struct("<4sIII")
_FINGERPRINT = struct.Struct("<5I32s")


@dataclass(frozen=True)
class ChannelLayout:
    names: tuple

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        if len(self.names) < 1:
            raise ValueError("at least one payload channel is required")

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def stored(self) -> int:
        return self.n + 1

    @property
    def normalization_index(self) -> int:
        return self.n


def level_side(log2_res: int, level: int) -> int:
    return max(1, 2 ** (log2_res - level))


@dataclass
class HtexTexture:
    """Texel arrays are indexed ``[row j, column i, channel]``.

    Texel ``(i, j)`` is centred on quad coordinates
    ``((i + 0.5) / side, (j + 0.5) / side)``.
    """

    edge: int
    log2_res: int
    levels: list = field(default_factory=list)

    @property
    def side(self) -> int:
        return 2 ** self.log2_res

    @property
    def n_levels(self) -> int:
        return self.log2_res + 1

    @property
    def base(self) -> np.ndarray:
        return self.levels[0]

    @classmethod
    def from_base(cls, edge, base, normalization=True):
        """Wrap a ``(side, side, n)`` payload array, appending the ones channel."""
        base = np.asarray(base, dtype=np.float32)
        side = base.shape[0]
        if base.ndim != 3 or base.shape[1] != side or side & (side - 1):
            raise ValueError(f"edge {edge}: base level must be square with power-of-two side, got {base.shape}")
        if normalization:
            base = np.concatenate([base, np.ones(base.shape[:2] + (1,), np.float32)], axis=2)
        tex = cls(int(edge), side.bit_length() - 1, [np.ascontiguousarray(base)])
        return generate_mips(tex)

    def check(self, layout: ChannelLayout, all_levels=False):
        if not 0 <= self.log2_res <= MAX_LOG2_RES:
            raise FormatError(f"edge {self.edge}: log2 resolution {self.log2_res} outside [0, {MAX_LOG2_RES}]")
        if len(self.levels) != self.n_levels:
            raise FormatError(f"edge {self.edge}: expected {self.n_levels} mip levels, found {len(self.levels)}")
        for k, lvl in enumerate(self.levels):
            s = level_side(self.log2_res, k)
            if lvl.shape != (s, s, layout.stored):
                raise FormatError(f"edge {self.edge}: level {k} has shape {lvl.shape}, expected {(s, s, layout.stored)}")
        for k, lvl in enumerate(self.levels if all_levels else self.levels[:1]):
            norm = lvl[..., layout.normalization_index]
            if not (norm == 1.0).all():
                j, i = np.argwhere(norm != 1.0)[0]
                raise FormatError(
                    f"edge {self.edge}: normalization channel {layout.normalization_index} "
                    f"is {float(norm[j, i])} at level {k} texel ({i}, {j}), expected 1.0"
                )


def generate_mips(texture: HtexTexture) -> HtexTexture:
    """Rebuild the full chain below the base level with a 2x2 box filter."""
    levels = [texture.levels[0]]
    cur = texture.levels[0].astype(np.float64)
    while cur.shape[0] > 1:
        s = cur.shape[0] // 2
        cur = cur.reshape(s, 2, s, 2, -1).mean(axis=(1, 3))
        levels.append(cur.astype(np.float32))
    return HtexTexture(texture.edge, texture.log2_res, levels)


class TextureSet:
    """All per-edge textures of a mesh plus their channel layout.

    ``textures[e]`` is the texture of edge ``e``. Call :meth:`touch` after
    modifying texels in place so cached sampling tables get rebuilt.
    """

    def __init__(self, layout: ChannelLayout, textures, fingerprint: Fingerprint | None = None):
        self.layout = layout
        self.textures = list(textures)
        self.fingerprint = fingerprint
        self._cache = {}

    def __len__(self):
        return len(self.textures)

    def __getitem__(self, e):
        return self.textures[e]

    def __iter__(self):
        return iter(self.textures)

    def touch(self):
        self._cache.clear()

    def cached(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def log2_resolutions(self) -> np.ndarray:
        return np.array([t.log2_res for t in self.textures], dtype=np.int64)

    def is_uniform(self) -> bool:
        return len(set(self.log2_resolutions().tolist())) <= 1

    def copy(self) -> "TextureSet":
        texs = [HtexTexture(t.edge, t.log2_res, [lvl.copy() for lvl in t.levels]) for t in self.textures]
        return TextureSet(self.layout, texs, self.fingerprint)

    def check(self, n_edges=None):
        if n_edges is not None and len(self.textures) != n_edges:
            raise FormatError(f"expected {n_edges} textures (one per edge), got {len(self.textures)}")
        for e, t in enumerate(self.textures):
            if t is None:
                raise FormatError(f"missing texture for edge {e}")
            if t.edge != e:
                raise FormatError(f"texture at slot {e} is labelled edge {t.edge}")
            t.check(self.layout, all_levels=True)

    def equals(self, other: "TextureSet") -> bool:
        """Bit-exact comparison of layouts, fingerprints and texels."""
        if self.layout != other.layout or self.fingerprint != other.fingerprint or len(self) != len(other):
            return False
        for a, b in zip(self.textures, other.textures):
            if a.log2_res != b.log2_res or len(a.levels) != len(b.levels):
                return False
            if any(x.tobytes() != y.tobytes() for x, y in zip(a.levels, b.levels)):
                return False
        return True


# -- serialization -----------------------------------------------------------


def write(sink, textures: TextureSet, fingerprint: Fingerprint | None = None) -> int:
    """Serialize ``textures`` to ``sink`` (path or binary stream); returns byte count."""
    fp = fingerprint or textures.fingerprint
    if fp is None:
        raise FormatError("a mesh fingerprint is required")
    textures.check(fp.E)
    layout = textures.layout
    chunks = [_HEADER.pack(MAGIC, VERSION, fp.E, 0), _FINGERPRINT.pack(fp.H, fp.V, fp.E, fp.F, fp.B, fp.digest)]
    chunks.append(struct.pack("<I", layout.n))
    for name in layout.names:
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)) + raw)
    chunks.append(bytes(textures.log2_resolutions().astype(np.uint8)))
    for t in textures.textures:
        for lvl in t.levels:
            chunks.append(np.ascontiguousarray(lvl, dtype="<f4").tobytes())
    data = b"".join(chunks)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)
    return len(data)


def to_bytes(textures: TextureSet, fingerprint: Fingerprint | None = None) -> bytes:
    buf = io.BytesIO()
    write(buf, textures, fingerprint)
    return buf.getvalue()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated file: {what} needs {n} bytes at offset {self.pos}, {len(self.data) - self.pos} left")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out


def read(source):
    """Parse an ``.htx`` container; returns ``(TextureSet, Fingerprint)``."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
    r = _Reader(data)
    magic, version, n_edges, _ = _HEADER.unpack(r.take(_HEADER.size, "header"))
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported .htx version {version} (this reader handles {VERSION})")
    H, V, E, F, B, digest = _FINGERPRINT.unpack(r.take(_FINGERPRINT.size, "fingerprint"))
    if E != n_edges:
        raise FormatError(f"header edge count {n_edges} disagrees with fingerprint E={E}")
    fp = Fingerprint(H, V, E, F, B, digest)
    (n,) = struct.unpack("<I", r.take(4, "channel count"))
    if n < 1:
        raise FormatError("channel layout has no payload channels")
    names = []
    for c in range(n):
        (ln,) = struct.unpack("<H", r.take(2, f"channel {c} name length"))
        names.append(r.take(ln, f"channel {c} name").decode("utf-8"))
    layout = ChannelLayout(tuple(names))
    res = np.frombuffer(r.take(E, "resolution table"), dtype=np.uint8)
    textures = []
    for e in range(E):
        lg = int(res[e])
        if lg > MAX_LOG2_RES:
            raise FormatError(f"edge {e}: log2 resolution {lg} exceeds {MAX_LOG2_RES}")
        levels = []
        for k in range(lg + 1):
            s = level_side(lg, k)
            raw = r.take(4 * s * s * layout.stored, f"edge {e} level {k} texels")
            levels.append(np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(s, s, layout.stored))
        textures.append(HtexTexture(e, lg, levels))
    if r.pos != len(data):
        raise FormatError(f"{len(data) - r.pos} trailing bytes after payload")
    ts = TextureSet(layout, textures, fp)
    for t in textures:
        t.check(layout)
    return ts, fp
