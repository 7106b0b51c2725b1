"""Byte-stable PNG output and simple image input.

Writing is done directly (8-bit RGB, filter type None on every row, one
zlib stream) so that identical pixel data always produces identical file
bytes, which golden-file tests and the pipeline manifest rely on.  Reading
goes through Pillow and accepts any PNG.
"""
from __future__ import annotations

import struct
import zlib

import numpy as np
from PIL import Image

_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _chunk(tag, payload):
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload))
    )


def encode_png(image):
    """Encode an (H, W, 3) uint8 array as deterministic PNG bytes."""
    arr = np.asarray(image)
    if arr.dtype != np.uint8 or arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) uint8 image, got {arr.dtype} {arr.shape}")
    height, width = arr.shape[:2]
    raw = b"".join(b"\x00" + arr[y].tobytes() for y in range(height))
    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return (
        _SIGNATURE
        + _chunk(b"IHDR", header)
        + _chunk(b"IDAT", zlib.compress(raw, 9))
        + _chunk(b"IEND", b"")
    )


def write_png(path, image):
    data = encode_png(image)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def read_png(path):
    """Load any PNG (or other Pillow-readable file) as (H, W, 3) uint8."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)
