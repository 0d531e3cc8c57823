"""File formats for masks, depths, images and cameras.

* Masks: binary PGM (P5) with maxval 65535, big-endian samples as the PNM
  spec requires. Stored values are the raw labels, hole sentinel included.
* Depths: 16-byte header (magic b"MSDP", u32 height, u32 width, u32
  reserved, all little-endian) followed by row-major float32 values.
  Invalid pixels are stored as 0.0, which no valid depth can take.
* Images: binary PPM (P6), maxval 255; float channels are quantized by
  rounding, so save/load is the identity exactly on 8-bit representable
  images.
* Cameras: small JSON documents.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError, ValidationError
from .types import Camera, ColorImage, DepthMap, SemanticMask

DEPTH_MAGIC = b"MSDP"
_DEPTH_HEADER = struct.Struct("<4sIII")


def _read_pnm_header(data: bytes, magic: bytes, path: Path) -> tuple[int, int, int, int]:
    """Parse a binary PNM header; returns (width, height, maxval, data offset)."""
    if not data.startswith(magic):
        raise FormatError(f"{path}: expected {magic.decode()} header")
    fields: list[int] = []
    pos = 2
    while len(fields) < 3:
        # Skip whitespace and '#' comment lines between header fields.
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            if eol < 0:
                raise FormatError(f"{path}: truncated header comment")
            pos = eol + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise FormatError(f"{path}: malformed header token {token!r}")
        fields.append(int(token))
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise FormatError(f"{path}: header not terminated")
    pos += 1  # single whitespace byte before the raster
    w, h, maxval = fields
    if w <= 0 or h <= 0:
        raise FormatError(f"{path}: non-positive image size {w}x{h}")
    return w, h, maxval, pos


def save_mask(path: str | Path, mask: SemanticMask) -> None:
    path = Path(path)
    h, w = mask.shape
    header = f"P5\n{w} {h}\n65535\n".encode()
    body = mask.labels.astype(">u2").tobytes()
    path.write_bytes(header + body)


def load_mask(path: str | Path, num_classes: int) -> SemanticMask:
    path = Path(path)
    data = path.read_bytes()
    w, h, maxval, off = _read_pnm_header(data, b"P5", path)
    if maxval != 65535:
        raise FormatError(f"{path}: mask files use maxval 65535, found {maxval}")
    need = w * h * 2
    if len(data) - off < need:
        raise FormatError(f"{path}: raster truncated ({len(data) - off} of {need} bytes)")
    labels = np.frombuffer(data, dtype=">u2", count=w * h, offset=off).reshape(h, w)
    if labels.max(initial=0) > num_classes:
        raise ValidationError(
            f"{path}: label {int(labels.max())} exceeds hole sentinel {num_classes}"
        )
    return SemanticMask(labels.astype(np.int32), num_classes)


def save_depth(path: str | Path, depth: DepthMap) -> None:
    path = Path(path)
    h, w = depth.shape
    values = np.where(depth.validity, depth.values, 0.0).astype("<f4")
    path.write_bytes(_DEPTH_HEADER.pack(DEPTH_MAGIC, h, w, 0) + values.tobytes())


def load_depth(path: str | Path) -> DepthMap:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _DEPTH_HEADER.size:
        raise FormatError(f"{path}: shorter than the 16-byte depth header")
    magic, h, w, _reserved = _DEPTH_HEADER.unpack_from(data)
    if magic != DEPTH_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    need = h * w * 4
    if h == 0 or w == 0 or len(data) - _DEPTH_HEADER.size != need:
        raise FormatError(f"{path}: payload size mismatch for {h}x{w} depth")
    values = np.frombuffer(data, dtype="<f4", count=h * w, offset=_DEPTH_HEADER.size)
    values = values.reshape(h, w)
    validity = values != 0.0
    picked = values[validity]
    if picked.size and (not np.isfinite(picked).all() or (picked < 0).any()):
        raise ValidationError(f"{path}: depth values must be finite and positive")
    return DepthMap(values.copy(), validity)


def save_image(path: str | Path, image: ColorImage) -> None:
    path = Path(path)
    h, w = image.shape
    header = f"P6\n{w} {h}\n255\n".encode()
    body = np.rint(image.rgb * 255.0).astype(np.uint8).tobytes()
    path.write_bytes(header + body)


def load_image(path: str | Path) -> ColorImage:
    path = Path(path)
    data = path.read_bytes()
    w, h, maxval, off = _read_pnm_header(data, b"P6", path)
    if maxval != 255:
        raise FormatError(f"{path}: image files use maxval 255, found {maxval}")
    need = w * h * 3
    if len(data) - off < need:
        raise FormatError(f"{path}: raster truncated ({len(data) - off} of {need} bytes)")
    rgb = np.frombuffer(data, dtype=np.uint8, count=need, offset=off).reshape(h, w, 3)
    return ColorImage(rgb.astype(np.float32) / 255.0)


def _camera_doc(cam: Camera) -> dict:
    return {
        "fx": cam.fx, "fy": cam.fy, "cx": cam.cx, "cy": cam.cy,
        "rotation": cam.rotation.tolist(),
        "translation": cam.translation.tolist(),
        "resolution": list(cam.resolution),
    }


def _camera_from_doc(doc: dict) -> Camera:
    return Camera(
        fx=float(doc["fx"]), fy=float(doc["fy"]),
        cx=float(doc["cx"]), cy=float(doc["cy"]),
        rotation=np.array(doc["rotation"], dtype=np.float64),
        translation=np.array(doc["translation"], dtype=np.float64),
        resolution=(int(doc["resolution"][0]), int(doc["resolution"][1])),
    )


def save_camera(path: str | Path, cam: Camera) -> None:
    Path(path).write_text(json.dumps(_camera_doc(cam), indent=1))


def load_camera(path: str | Path) -> Camera:
    path = Path(path)
    try:
        return _camera_from_doc(json.loads(path.read_text()))
    except (KeyError, json.JSONDecodeError, TypeError) as exc:
        raise FormatError(f"{path}: malformed camera file: {exc}") from exc


def save_cameras(path: str | Path, cams) -> None:
    Path(path).write_text(json.dumps([_camera_doc(c) for c in cams], indent=1))


def load_cameras(path: str | Path) -> list[Camera]:
    path = Path(path)
    try:
        docs = json.loads(path.read_text())
        return [_camera_from_doc(doc) for doc in docs]
    except (KeyError, json.JSONDecodeError, TypeError) as exc:
        raise FormatError(f"{path}: malformed camera file: {exc}") from exc
