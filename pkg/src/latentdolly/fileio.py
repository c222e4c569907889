"""Bit-exact file formats: latent archives, PPM/PGM images, f32 rasters,
and fixed-precision CSV.

Latent archive layout (all integers little-endian):

    bytes 0-3   magic "KRNR"
    bytes 4-5   version (u16), currently 1
    bytes 6-7   dtype tag (u16): 0 = float32 LE, 1 = float64 LE
    bytes 8-27  dims B, F, C, H, W (5 x u32)
    bytes 28-   raw row-major payload

The format is deliberately trivial so any language can parse it; it is
the boundary that foreign bindings cross.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import (
    ConfigError,
    FormatError,
    TruncationError,
    UnsupportedFormatError,
)
from .tensor import BinaryMask, LatentTensor

MAGIC = b"KRNR"
VERSION = 1
_DTYPE_TAGS = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_TAG_FOR = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


def write_latent(path, tensor: LatentTensor) -> None:
    dims = tensor.dims
    tag = _TAG_FOR[np.dtype(tensor.dtype)]
    header = MAGIC + struct.pack("<HH5I", VERSION, tag, *dims)
    payload = np.ascontiguousarray(tensor.data, dtype=_DTYPE_TAGS[tag]).tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def read_latent(path) -> LatentTensor:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 28:
        raise TruncationError(f"file too short for a latent header ({len(raw)} bytes)")
    if raw[:4] != MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}, expected {MAGIC!r}", offset=0)
    version, tag = struct.unpack_from("<HH", raw, 4)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if tag not in _DTYPE_TAGS:
        raise FormatError(f"unknown dtype tag {tag}", offset=6)
    dims = struct.unpack_from("<5I", raw, 8)
    dtype = _DTYPE_TAGS[tag]
    expect = int(np.prod(dims)) * dtype.itemsize
    payload = raw[28:]
    if len(payload) != expect:
        raise TruncationError(f"payload is {len(payload)} bytes, header promises {expect}")
    data = np.frombuffer(payload, dtype=dtype).reshape(dims)
    return LatentTensor(data.astype(dtype.newbyteorder("=")))


def write_mask(path, mask: BinaryMask) -> None:
    write_latent(path, LatentTensor(mask.data.astype(np.float32)))


def read_mask(path) -> BinaryMask:
    return BinaryMask(read_latent(path).data)


def _read_pnm_header(raw: bytes, magic: bytes, path):
    if raw[:2] in (b"P3", b"P2"):
        raise UnsupportedFormatError(f"{path}: ASCII PNM variants are not supported")
    if raw[:2] != magic:
        raise FormatError(f"{path}: bad magic {raw[:2]!r}, expected {magic!r}", offset=0)
    # Header tokens: magic, width, height, maxval, separated by whitespace
    # (comments are not emitted by this package and not accepted).
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PNM header", offset=start)
        fields.append(int(raw[start:pos]))
    return fields[0], fields[1], fields[2], pos + 1


def write_image_ppm(path, image: np.ndarray) -> None:
    """Binary P6, maxval 255. Accepts float in [0, 1] or uint8."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise FormatError(f"PPM image must be (H, W, 3), got {image.shape}")
    if image.dtype != np.uint8:
        image = np.clip(np.floor(image * 255.0 + 0.5), 0, 255).astype(np.uint8)
    h, w = image.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(image.tobytes())


def read_image_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    w, h, maxval, offset = _read_pnm_header(raw, b"P6", path)
    if maxval != 255:
        raise UnsupportedFormatError(f"{path}: only maxval 255 PPM supported, got {maxval}")
    payload = raw[offset:]
    if len(payload) < w * h * 3:
        raise TruncationError(f"{path}: PPM payload short ({len(payload)} < {w * h * 3})")
    return np.frombuffer(payload[: w * h * 3], dtype=np.uint8).reshape(h, w, 3).copy()


def write_mask_pgm(path, mask: np.ndarray) -> None:
    """Binary P5, maxval 255 (mask values 0/1 stored as 0/255)."""
    mask = np.asarray(mask)
    data = (mask.astype(np.uint8) * 255) if mask.max(initial=0) <= 1 else mask.astype(np.uint8)
    h, w = mask.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def read_depth(path, scale: float = 1.0) -> np.ndarray:
    """Depth raster: either an F32R file or a 16-bit binary PGM whose
    integer values are multiplied by ``scale`` (manifest-supplied)."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] == b"F32R":
        if len(raw) < 12:
            raise TruncationError(f"{path}: F32R header truncated")
        h, w = struct.unpack_from("<2I", raw, 4)
        expect = h * w * 4
        if len(raw) - 12 != expect:
            raise TruncationError(f"{path}: F32R payload {len(raw) - 12} bytes, expected {expect}")
        return np.frombuffer(raw, dtype="<f4", count=h * w, offset=12).reshape(h, w).astype(np.float32)
    if raw[:2] == b"P5":
        w, h, maxval, offset = _read_pnm_header(raw, b"P5", path)
        if maxval != 65535:
            raise UnsupportedFormatError(f"{path}: depth PGM must be 16-bit (maxval 65535)")
        payload = raw[offset:]
        if len(payload) < w * h * 2:
            raise TruncationError(f"{path}: PGM payload short")
        vals = np.frombuffer(payload[: w * h * 2], dtype=">u2").reshape(h, w)
        return (vals.astype(np.float64) * scale).astype(np.float32)
    raise UnsupportedFormatError(f"{path}: not an F32R raster or 16-bit PGM")


def write_depth_f32r(path, depth: np.ndarray) -> None:
    depth = np.asarray(depth, dtype="<f4")
    h, w = depth.shape
    with open(path, "wb") as f:
        f.write(b"F32R" + struct.pack("<2I", h, w))
        f.write(depth.tobytes())


def format_number(x) -> str:
    """Platform-stable 9-significant-digit decimal."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".9g")


def write_csv(path_or_file, rows, header) -> None:
    """Header row plus 9-significant-digit values, '\\n' line endings."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_number(v) for v in row))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w", newline="") as f:
            f.write(text)


def load_strict_json(path, allowed_keys) -> dict:
    """JSON object whose keys must all be known; unknown keys are errors."""
    with open(path) as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    for key in obj:
        if key not in allowed_keys:
            raise ConfigError(f"{path}: unknown config key {key!r}")
    return obj
