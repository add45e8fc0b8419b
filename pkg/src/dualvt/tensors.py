"""Dense float32 tensors and the BTSR binary file format.

Tensors are plain numpy float32 arrays, row-major, treated as immutable
after construction.  The BTSR layout is:

    4 bytes  magic "BTSR"
    1 byte   version (currently 1)
    1 byte   rank (0..8)
    6 bytes  reserved, zero
    rank * 8 bytes  little-endian unsigned extents
    prod(extents) * 4 bytes  little-endian IEEE-754 float32 payload

The format is bit-exact: write followed by read reproduces the payload
bitwise, which the golden/oracle tests rely on.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import BadMagic, NonFiniteValue, RankOverflow, TruncatedPayload

MAGIC = b"BTSR"
VERSION = 1
MAX_RANK = 8

_HEADER = struct.Struct("<4sBB6s")


def as_tensor(values, shape=None) -> np.ndarray:
    """Coerce to a C-contiguous float32 array, rejecting NaN/Inf."""
    arr = np.ascontiguousarray(values, dtype=np.float32)
    if shape is not None:
        arr = arr.reshape(shape)
    if arr.ndim > MAX_RANK:
        raise RankOverflow(f"rank {arr.ndim} exceeds maximum {MAX_RANK}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue("tensor contains NaN or Inf")
    return arr


def tensor_write(t: np.ndarray, path) -> None:
    """Write a tensor to `path` in BTSR format."""
    t = as_tensor(t)
    header = _HEADER.pack(MAGIC, VERSION, t.ndim, b"\x00" * 6)
    extents = struct.pack(f"<{t.ndim}Q", *t.shape) if t.ndim else b""
    payload = t.astype("<f4", copy=False).tobytes(order="C")
    Path(path).write_bytes(header + extents + payload)


def tensor_read(path) -> np.ndarray:
    """Read a BTSR file, returning the exact stored bits as float32."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedPayload(f"{path}: file shorter than header")
    magic, version, rank, _ = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagic(f"{path}: expected {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise BadMagic(f"{path}: unsupported version {version}")
    if rank > MAX_RANK:
        raise RankOverflow(f"{path}: rank {rank} exceeds maximum {MAX_RANK}")
    offset = _HEADER.size
    if len(raw) < offset + 8 * rank:
        raise TruncatedPayload(f"{path}: truncated extent table")
    shape = struct.unpack_from(f"<{rank}Q", raw, offset) if rank else ()
    offset += 8 * rank
    count = int(np.prod(shape, dtype=np.int64)) if rank else 1
    expected = count * 4
    if len(raw) - offset != expected:
        raise TruncatedPayload(
            f"{path}: payload is {len(raw) - offset} bytes, expected {expected}"
        )
    data = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
    arr = data.reshape(shape).astype(np.float32, copy=True)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{path}: payload contains NaN or Inf")
    return arr
