"""Binary field files and trajectory records.

Layout: b"ANF1", u32 d, u32 n (d times), f64 L, u8 tag (0 physical,
1 spectral), then the complex samples as little-endian f64 (re, im) pairs
with axis d slowest. A file may hold several consecutive sample blocks after
one header (vector components, trajectory states). Spectral samples are
stored in DFT index order.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .grid import PHYSICAL, SPECTRAL, Field, Grid, VectorField

MAGIC = b"ANF1"
_TAG_CODE = {PHYSICAL: 0, SPECTRAL: 1}
_CODE_TAG = {v: k for k, v in _TAG_CODE.items()}


class FieldFormatError(ValueError):
    """Malformed or truncated field file."""


def encode_header(grid: Grid, tag: str) -> bytes:
    return (MAGIC + struct.pack("<I", grid.d) + struct.pack(f"<{grid.d}I", *grid.shape)
            + struct.pack("<d", grid.L) + struct.pack("<B", _TAG_CODE[tag]))


def encode_samples(a: np.ndarray) -> bytes:
    """Complex grid samples, axis 1 fastest."""
    a = np.asarray(a, dtype="<c16")
    return np.ravel(a, order="F").tobytes()


def decode(buf: bytes) -> tuple[Grid, str, np.ndarray]:
    """Header and every sample block; blocks come back as shape (k, *grid.shape)."""
    if len(buf) < 9 or buf[:4] != MAGIC:
        raise FieldFormatError("missing ANF1 magic")
    (d,) = struct.unpack_from("<I", buf, 4)
    if d not in (1, 2, 3):
        raise FieldFormatError(f"bad dimension {d}")
    off = 8
    need = off + 4 * d + 8 + 1
    if len(buf) < need:
        raise FieldFormatError("truncated header")
    ns = struct.unpack_from(f"<{d}I", buf, off)
    off += 4 * d
    (L,) = struct.unpack_from("<d", buf, off)
    off += 8
    (code,) = struct.unpack_from("<B", buf, off)
    off += 1
    if code not in _CODE_TAG:
        raise FieldFormatError(f"bad representation tag {code}")
    if len(set(ns)) != 1:
        raise FieldFormatError(f"unequal points per axis {ns}")
    try:
        grid = Grid(d, ns[0], L)
    except ValueError as e:
        raise FieldFormatError(str(e)) from e
    body = len(buf) - off
    rec = 16 * grid.size
    if body == 0 or body % rec:
        raise FieldFormatError(f"payload of {body} bytes is not a whole number of {rec}-byte records")
    flat = np.frombuffer(buf, dtype="<c16", offset=off)
    k = body // rec
    blocks = flat.reshape((k,) + grid.shape[::-1]).transpose((0,) + tuple(range(d, 0, -1)))
    return grid, _CODE_TAG[code], np.array(blocks, dtype=complex)


def write_field(path, f) -> None:
    """Write a Field (one block) or VectorField (d blocks)."""
    blocks = [f.data] if isinstance(f, Field) else list(f.data)
    data = encode_header(f.grid, f.tag) + b"".join(encode_samples(b) for b in blocks)
    _atomic_write(path, data)


def read_field(path, vector: bool | None = None):
    """Read a field file; one block gives a Field, d blocks a VectorField."""
    try:
        buf = Path(path).read_bytes()
    except OSError as e:
        raise FieldFormatError(f"cannot read {path}: {e.strerror}") from e
    grid, tag, blocks = decode(buf)
    if vector is None:
        vector = len(blocks) == grid.d and grid.d > 1
    if vector:
        if len(blocks) != grid.d:
            raise FieldFormatError(f"expected {grid.d} component blocks, found {len(blocks)}")
        return VectorField(grid, blocks, tag)
    if len(blocks) != 1:
        raise FieldFormatError(f"expected one sample block, found {len(blocks)}")
    return Field(grid, blocks[0], tag)


def write_trajectory(path, traj, nu: float) -> None:
    """Header once, then each state's components in time order; JSON sidecar alongside."""
    g = traj.grid
    body = b"".join(encode_samples(c) for state in traj.data for c in state)
    _atomic_write(path, encode_header(g, SPECTRAL) + body)
    side = {"nu": float(nu), "T": float(traj.T), "steps": int(traj.steps)}
    _atomic_write(sidecar_path(path), json.dumps(side, sort_keys=True).encode())


def read_trajectory(path):
    from .operators import Trajectory, time_grid

    grid, tag, blocks = decode(Path(path).read_bytes())
    meta = json.loads(Path(sidecar_path(path)).read_text())
    steps = int(meta["steps"])
    if tag != SPECTRAL or len(blocks) != (steps + 1) * grid.d:
        raise FieldFormatError("trajectory record count does not match its sidecar")
    data = blocks.reshape((steps + 1, grid.d) + grid.shape)
    return Trajectory(grid, time_grid(meta["T"], steps), data), float(meta["nu"])


def sidecar_path(path) -> str:
    return str(path) + ".json"


def _atomic_write(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
