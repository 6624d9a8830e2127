"""Binary PGM (P5, 8-bit) raster I/O for camera frames and masks."""

from __future__ import annotations

import numpy as np


def read_pgm(data: bytes) -> np.ndarray:
    """Decode P5 bytes into a (height, width) uint8 array."""
    pos = 0

    def token() -> bytes:
        nonlocal pos
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
            elif data[pos : pos + 1] == b"#":
                nl = data.find(b"\n", pos)
                pos = len(data) if nl < 0 else nl + 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        return data[start:pos]

    if token() != b"P5":
        raise ValueError("not a P5 PGM")
    width, height, maxval = int(token()), int(token()), int(token())
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    need = width * height
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise ValueError("truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(image: np.ndarray) -> bytes:
    """Encode a (height, width) uint8 array as P5 bytes."""
    arr = np.asarray(image)
    if arr.ndim != 2:
        raise ValueError("image must be 2-D")
    arr = arr.astype(np.uint8)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    return header + arr.tobytes()


def mask_to_pgm(mask: np.ndarray) -> bytes:
    """Encode a boolean mask as a {0, 255} P5 raster."""
    return write_pgm(np.where(mask, 255, 0).astype(np.uint8))


def pgm_to_mask(data: bytes) -> np.ndarray:
    """Decode a P5 raster into a boolean mask (nonzero means foreground)."""
    return read_pgm(data) > 0
