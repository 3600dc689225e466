"""Binary field files and their JSON provenance sidecars.

Layout: a 64-byte little-endian header

    offset  size  content
    0       4     magic ``b"NVSF"``
    4       4     version (u32)
    8       4     N (u32)
    12      8     R (f64)
    20      1     kind (u8, 0 = real, 1 = complex)
    21      43    zero padding

followed by the row-major payload: ``N*N`` float64 for real fields, ``N*N``
interleaved (re, im) float64 pairs for complex ones.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .grid import ComplexField, Grid, RealField

MAGIC = b"NVSF"
VERSION = 1
HEADER_SIZE = 64
_HEADER = struct.Struct("<4sIIdB")


class FieldFormatError(ValueError):
    pass


def encode_field(f: ComplexField) -> bytes:
    kind = 0 if isinstance(f, RealField) else 1
    header = _HEADER.pack(MAGIC, VERSION, f.grid.N, f.grid.R, kind)
    header = header.ljust(HEADER_SIZE, b"\0")
    if kind == 0:
        payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    else:
        payload = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    return header + payload


def decode_field(blob: bytes) -> ComplexField:
    if len(blob) < HEADER_SIZE or blob[:4] != MAGIC:
        raise FieldFormatError("bad header")
    magic, version, n, radius, kind = _HEADER.unpack_from(blob)
    if version != VERSION:
        raise FieldFormatError(f"bad header: unsupported version {version}")
    if kind not in (0, 1):
        raise FieldFormatError(f"bad header: unknown kind {kind}")
    itemsize = 8 if kind == 0 else 16
    payload = blob[HEADER_SIZE:]
    if len(payload) != n * n * itemsize:
        raise FieldFormatError(
            f"size mismatch: header says N={n} ({n * n * itemsize} bytes), payload has {len(payload)}"
        )
    dtype = "<f8" if kind == 0 else "<c16"
    values = np.frombuffer(payload, dtype=dtype).reshape(n, n)
    if not np.all(np.isfinite(values)):
        raise FieldFormatError("NaN or infinite payload")
    grid = Grid(radius, n)
    return RealField(grid, values) if kind == 0 else ComplexField(grid, values)


def write_field(path, f: ComplexField, provenance: dict | None = None) -> Path:
    """Write ``f`` to ``path`` and, when given, a ``.json`` provenance sidecar."""
    path = Path(path)
    path.write_bytes(encode_field(f))
    if provenance is not None:
        sidecar = path.with_suffix(path.suffix + ".json")
        sidecar.write_text(json.dumps(provenance, indent=2, sort_keys=True, default=str) + "\n")
    return path


def read_field(path) -> ComplexField:
    return decode_field(Path(path).read_bytes())


def read_provenance(path) -> dict:
    path = Path(path)
    return json.loads(path.with_suffix(path.suffix + ".json").read_text())


def field_io(mode: str, path, f: ComplexField | None = None, provenance: dict | None = None):
    """Single entry point: ``field_io("write", path, f)`` or ``field_io("read", path)``."""
    if mode == "write":
        if f is None:
            raise ValueError("write mode needs a field")
        write_field(path, f, provenance)
        return f
    if mode == "read":
        return read_field(path)
    raise ValueError(f"mode must be 'read' or 'write', got {mode!r}")
