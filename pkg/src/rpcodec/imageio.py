"""PGM (P5, maxval 255) read/write and PNG input."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .core import Frame


class ImageFormatError(ValueError):
    """Unreadable or unsupported image data."""


_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n?)*([^\s#]+)")


def decode_pgm(data: bytes) -> Frame:
    pos = 0
    fields = []
    for _ in range(4):
        m = _TOKEN.match(data, pos)
        if not m:
            raise ImageFormatError("truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    if fields[0] != b"P5":
        raise ImageFormatError(f"not a binary PGM (magic {fields[0][:8]!r})")
    try:
        width, height, maxval = (int(f) for f in fields[1:])
    except ValueError:
        raise ImageFormatError("non-numeric PGM header field") from None
    if maxval != 255:
        raise ImageFormatError(f"only maxval 255 is supported, got {maxval}")
    if width <= 0 or height <= 0:
        raise ImageFormatError("PGM dimensions must be positive")
    # exactly one whitespace byte separates header and raster
    pos += 1
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise ImageFormatError(f"PGM raster holds {len(raster)} bytes, expected {width * height}")
    return Frame(width, height, np.frombuffer(raster, dtype=np.uint8).reshape(height, width))


def encode_pgm(frame: Frame) -> bytes:
    return b"P5\n%d %d\n255\n" % (frame.width, frame.height) + frame.samples.tobytes()


def read_pgm(path) -> Frame:
    return decode_pgm(Path(path).read_bytes())


def write_pgm(path, frame: Frame) -> None:
    Path(path).write_bytes(encode_pgm(frame))


def rgb_to_luma(rgb: np.ndarray) -> np.ndarray:
    """round(0.299 R + 0.587 G + 0.114 B), halves rounded up."""
    rgb = rgb.astype(np.float64)
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.clip(np.floor(y + 0.5), 0, 255).astype(np.uint8)


def read_png(path) -> Frame:
    from PIL import Image

    try:
        with Image.open(path) as im:
            if im.format != "PNG":
                raise ImageFormatError(f"{path}: not a PNG file")
            if im.mode.startswith("I") or im.mode == "F":
                raise ImageFormatError(f"{path}: only 8-bit PNG is supported")
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
            elif im.mode == "1":
                arr = np.asarray(im.convert("L"), dtype=np.uint8)
            else:
                arr = rgb_to_luma(np.asarray(im.convert("RGB")))
    except ImageFormatError:
        raise
    except Exception as e:  # Pillow raises a zoo of types on bad data
        raise ImageFormatError(f"{path}: {e}") from None
    return Frame.from_array(arr)


def read_image(path) -> Frame:
    """Read a PGM (P5) or PNG image as an 8-bit grayscale frame."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(8)
    if head[:2] == b"P5":
        return read_pgm(path)
    if head == b"\x89PNG\r\n\x1a\n":
        return read_png(path)
    raise ImageFormatError(f"{path}: unsupported image format (expected PGM P5 or PNG)")
