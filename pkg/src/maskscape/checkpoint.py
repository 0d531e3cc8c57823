"""Versioned binary container for named parameter arrays.

Layout (all integers little-endian):

    magic   4 bytes  b"MSCK"
    version u32      currently 1
    count   u32      number of entries
    entry * count:
        name_len u16, name utf-8
        dtype    u8   0 = float32, 1 = int32, 2 = uint8, 3 = float64
        ndim     u8, dims u32 * ndim
        data     raw array bytes, C order

Weights are float32; int32/uint8 exist for index tables (mesh triangles,
label arrays) and float64 for scalar metadata that must survive exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"MSCK"
VERSION = 1

_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<i4"), 2: np.dtype("u1"), 3: np.dtype("<f8")}
_CODES = {np.dtype(np.float32): 0, np.dtype(np.int32): 1, np.dtype(np.uint8): 2,
          np.dtype(np.float64): 3}


def save_arrays(path: str | Path, arrays: dict[str, np.ndarray]) -> None:
    parts = [MAGIC, struct.pack("<II", VERSION, len(arrays))]
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        if arr.dtype in (np.int64, np.int16, np.bool_):
            arr = arr.astype(np.int32)
        elif arr.dtype == np.float16:
            arr = arr.astype(np.float32)
        if arr.dtype not in _CODES:
            raise ValueError(f"unsupported dtype {arr.dtype} for entry '{name}'")
        encoded = name.encode()
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<BB", _CODES[arr.dtype], arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(np.ascontiguousarray(arr).tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_arrays(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != MAGIC:
        raise FormatError(f"{path}: not a parameter container (bad magic)")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported container version {version}")
    out: dict[str, np.ndarray] = {}
    pos = 12
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos : pos + name_len].decode()
            pos += name_len
            code, ndim = struct.unpack_from("<BB", data, pos)
            pos += 2
            dims = struct.unpack_from(f"<{ndim}I", data, pos)
            pos += 4 * ndim
            dtype = _DTYPES[code]
            n_bytes = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
            if pos + n_bytes > len(data):
                raise FormatError(f"{path}: truncated entry '{name}'")
            arr = np.frombuffer(data, dtype=dtype, count=int(np.prod(dims, dtype=np.int64)),
                                offset=pos).reshape(dims)
            out[name] = arr.copy()
            pos += n_bytes
    except (struct.error, KeyError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: corrupt container: {exc}") from exc
    if pos != len(data):
        raise FormatError(f"{path}: {len(data) - pos} trailing bytes")
    return out


def save_scalar_meta(arrays: dict[str, np.ndarray], **scalars: float) -> None:
    """Stash small config scalars alongside weights, at full float64."""
    for key, value in scalars.items():
        arrays[f"meta/{key}"] = np.asarray([value], dtype=np.float64)


def read_scalar_meta(arrays: dict[str, np.ndarray], key: str) -> float:
    try:
        return float(arrays[f"meta/{key}"][0])
    except KeyError as exc:
        raise FormatError(f"container is missing metadata entry '{key}'") from exc
