"""CMAF1 field dump format.

Layout: bytes 'C','M','A','F',0x01; little-endian u32 n, u32 N,
u64 count = N**(2n); then count float64 values row-major (axis order
x1,y1,...,xn,yn, last axis fastest).  Round-trips are bit exact.
"""

from __future__ import annotations

import struct

import numpy as np

from .geometry import Grid, ScalarField

MAGIC = b"CMAF\x01"
_HEADER = struct.Struct("<IIQ")


def write_field(path, field: ScalarField) -> None:
    grid = field.grid
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(grid.n, grid.N, grid.num_points))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_info(path) -> tuple[int, int, int]:
    """Header echo: (n, N, count)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a CMAF1 file (bad magic {magic!r})")
        n, N, count = _HEADER.unpack(fh.read(_HEADER.size))
    if count != N ** (2 * n):
        raise ValueError(f"{path}: count {count} inconsistent with n={n}, N={N}")
    return n, N, count


def read_field(path) -> ScalarField:
    n, N, count = read_info(path)
    with open(path, "rb") as fh:
        fh.seek(len(MAGIC) + _HEADER.size)
        data = np.frombuffer(fh.read(count * 8), dtype="<f8")
    if data.size != count:
        raise ValueError(f"{path}: truncated payload ({data.size} of {count} values)")
    grid = Grid(n, N)
    return ScalarField(grid, data.reshape(grid.shape).astype(np.float64))
