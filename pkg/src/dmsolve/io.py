"""On-disk formats: binary fields, JSON results and CSV tables.

Binary field layout (little endian)::

    b"DMSF"  u32 version=1  u64 n  f64 extent  n x (f64 re, f64 im)
"""
from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .spectral import Field, GridSpec

__all__ = ["MAGIC", "write_field", "read_field", "field_to_bytes", "field_from_bytes",
           "write_json", "write_csv", "rows_to_csv"]

MAGIC = b"DMSF"
VERSION = 1
_HEADER = struct.Struct("<4sIQd")


def field_to_bytes(f: Field) -> bytes:
    head = _HEADER.pack(MAGIC, VERSION, f.grid.n, float(f.grid.extent))
    body = np.ascontiguousarray(f.values, dtype="<c16").tobytes()
    return head + body


def field_from_bytes(raw: bytes) -> Field:
    if len(raw) < _HEADER.size:
        raise InvalidInputError("truncated field file: header incomplete")
    magic, version, n, extent = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise InvalidInputError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise InvalidInputError(f"unsupported field version {version}")
    expected = _HEADER.size + 16 * n
    if len(raw) != expected:
        raise InvalidInputError(f"field file has {len(raw)} bytes, expected {expected}")
    vals = np.frombuffer(raw, dtype="<c16", count=n, offset=_HEADER.size)
    return Field(GridSpec(int(n), float(extent)), vals.astype(complex))


def write_field(path, f: Field) -> Path:
    path = Path(path)
    path.write_bytes(field_to_bytes(f))
    return path


def read_field(path) -> Field:
    return field_from_bytes(Path(path).read_bytes())


def write_json(path, obj) -> Path:
    path = Path(path)
    # sorted keys and repr floats keep reruns byte-identical
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")
    return path


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.write_text(rows_to_csv(header, rows))
    return path
