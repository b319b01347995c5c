"""Image file I/O: 16-bit binary PGM (bit-exact reference format) and
8-bit grayscale PNG (viewer path)."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image as PilImage


class ImageFormatError(ValueError):
    """Raised for malformed image files."""


def to_u16(img: np.ndarray) -> np.ndarray:
    """Quantize a [0,1] float image to uint16 (round to nearest)."""
    return np.rint(np.clip(img, 0.0, 1.0) * 65535.0).astype(np.uint16)


def to_u8(img: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def quantize16(img: np.ndarray) -> np.ndarray:
    """Snap a float image to the 16-bit grid it will round-trip through."""
    return to_u16(img).astype(np.float64) / 65535.0


def encode_pgm16(img: np.ndarray) -> bytes:
    """P5 PGM with maxval 65535; samples are big-endian per the format."""
    if img.ndim != 2:
        raise ValueError(f"expected a 2-d image, got shape {img.shape}")
    h, w = img.shape
    header = f"P5\n{w} {h}\n65535\n".encode("ascii")
    return header + to_u16(img).astype(">u2").tobytes()


def write_pgm16(path, img: np.ndarray) -> None:
    Path(path).write_bytes(encode_pgm16(img))


def read_pgm16(path) -> np.ndarray:
    """Read a binary PGM back into a float image in [0,1]."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ImageFormatError(f"{path}: not a binary PGM (P5)")
    # header = magic, width, height, maxval as whitespace-separated tokens,
    # with optional '#' comment lines
    tokens, pos = [], 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ImageFormatError(f"{path}: bad PGM header") from exc
    if maxval == 65535:
        raw = np.frombuffer(data, dtype=">u2", count=w * h, offset=pos)
    elif maxval == 255:
        raw = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos)
    else:
        raise ImageFormatError(f"{path}: unsupported maxval {maxval}")
    if raw.size != w * h:
        raise ImageFormatError(f"{path}: truncated pixel payload")
    return raw.reshape(h, w).astype(np.float64) / maxval


def encode_png8(img: np.ndarray) -> bytes:
    buf = io.BytesIO()
    PilImage.fromarray(to_u8(img), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def write_png8(path, img: np.ndarray) -> None:
    Path(path).write_bytes(encode_png8(img))


def read_image(path) -> np.ndarray:
    """Load a grayscale image (.pgm or anything PIL decodes) as [0,1] floats."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm16(path)
    with PilImage.open(path) as im:
        arr = np.asarray(im.convert("I") if im.mode in ("I;16", "I") else im.convert("L"))
    peak = 65535.0 if arr.dtype.itemsize > 1 or arr.max() > 255 else 255.0
    return arr.astype(np.float64) / peak
