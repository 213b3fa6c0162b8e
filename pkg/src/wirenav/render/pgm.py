"""Binary portable graymap (P5) encode/decode for debug dumps and the wire
protocol. Values quantize to 8 bits; 1.0 maps to 255 exactly, so the
wire-pixel test (== 1.0) survives a PGM round trip."""

from __future__ import annotations

import numpy as np

from .camera import RenderError


def encode_pgm(image: np.ndarray) -> bytes:
    img = np.asarray(image)
    if img.ndim != 2:
        raise RenderError(f"expected 2-D image, got shape {img.shape}")
    if img.dtype == np.uint8:
        data = img
    else:
        arr = np.asarray(img, dtype=np.float64)
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise RenderError("float image values must lie in [0, 1]")
        data = np.round(arr * 255.0).astype(np.uint8)
    h, w = data.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + data.tobytes()


def decode_pgm(blob: bytes) -> np.ndarray:
    """P5 bytes -> float image in [0, 1]."""
    if not blob.startswith(b"P5"):
        raise RenderError("not a binary PGM (P5) stream")
    # header: magic, width, height, maxval, single whitespace, then raster
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(blob) and blob[pos : pos + 1].isspace():
            pos += 1
        if pos < len(blob) and blob[pos : pos + 1] == b"#":
            while pos < len(blob) and blob[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise RenderError("truncated PGM header")
        fields.append(int(blob[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise RenderError(f"unsupported maxval {maxval}")
    raster = blob[pos : pos + w * h]
    if len(raster) != w * h:
        raise RenderError("truncated PGM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w) / 255.0


def write_pgm(path, image) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(image))


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())
