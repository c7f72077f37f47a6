"""Grayscale images: decoding, luma conversion, bilinear resize, PGM output."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Optional

import numpy as np

from scenechar import kernels

LUMA = (0.299, 0.587, 0.114)
DEFAULT_SIDE = 32


class ImageDecodeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Grayscale pixel grid with intensities in [0, 1] and an optional label."""

    pixels: np.ndarray
    label: Optional[Hashable] = None

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2 or p.size == 0:
            raise ValueError(f"image must be a non-empty 2-D grid, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("image contains non-finite pixels")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError(
                f"pixel intensities must lie in [0, 1], got [{p.min()}, {p.max()}]"
            )
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "pixels", p)

    @property
    def shape(self):
        return self.pixels.shape

    @property
    def side(self) -> int:
        h, w = self.pixels.shape
        if h != w:
            raise ValueError(f"image is not square: {h}x{w}")
        return h


def _read_pgm(data: bytes, path) -> np.ndarray:
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise ImageDecodeError(f"{path}: not a PGM file")
    # header: magic, width, height, maxval, separated by whitespace/comments
    tokens = []
    i = 2
    n = len(data)
    while len(tokens) < 3:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j : j + 1].isspace():
            j += 1
        if j == i:
            raise ImageDecodeError(f"{path}: truncated PGM header")
        tokens.append(data[i:j])
        i = j
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise ImageDecodeError(f"{path}: malformed PGM header") from None
    if w < 1 or h < 1:
        raise ImageDecodeError(f"{path}: zero-dimension image {w}x{h}")
    if not 0 < maxval < 65536:
        raise ImageDecodeError(f"{path}: invalid maxval {maxval}")
    if magic == b"P5":
        i += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = w * h * dtype.itemsize
        raw = data[i : i + need]
        if len(raw) < need:
            raise ImageDecodeError(f"{path}: truncated PGM data ({len(raw)} of {need} bytes)")
        arr = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    else:
        vals = data[i:].split()
        if len(vals) < w * h:
            raise ImageDecodeError(f"{path}: truncated PGM data ({len(vals)} of {w * h} values)")
        try:
            arr = np.array([int(v) for v in vals[: w * h]], dtype=np.float64)
        except ValueError:
            raise ImageDecodeError(f"{path}: non-integer PGM sample") from None
    if arr.max(initial=0) > maxval:
        raise ImageDecodeError(f"{path}: sample exceeds maxval {maxval}")
    return arr.reshape(h, w) / maxval


def _read_with_pillow(path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L"):
                return np.asarray(im, dtype=np.float64) / 65535.0
            if mode == "I":
                return np.clip(np.asarray(im, dtype=np.float64) / 65535.0, 0.0, 1.0)
            if mode == "F":
                return np.clip(np.asarray(im, dtype=np.float64), 0.0, 1.0)
            if mode in ("L", "1", "LA"):
                return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageDecodeError(f"{path}: cannot decode image: {exc}") from exc
    return rgb @ np.array(LUMA)


def load_image(path, label=None) -> GrayImage:
    """Decode a PGM (P2/P5), PNG or other Pillow-readable raster as gray [0, 1]."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ImageDecodeError(f"{path}: cannot read file: {exc}") from exc
    if not data:
        raise ImageDecodeError(f"{path}: empty file")
    if data[:2] in (b"P2", b"P5"):
        pix = _read_pgm(data, path)
    else:
        pix = _read_with_pillow(path)
    if pix.size == 0:
        raise ImageDecodeError(f"{path}: zero-dimension image")
    return GrayImage(np.clip(pix, 0.0, 1.0), label=label)


def write_pgm(path, pixels) -> None:
    """Write an 8-bit binary (P5) PGM."""
    p = np.clip(np.asarray(pixels, dtype=np.float64), 0.0, 1.0)
    h, w = p.shape
    body = np.rint(p * 255.0).astype(np.uint8).tobytes()
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + body)


def resize_bilinear(img: GrayImage, side: int = DEFAULT_SIDE) -> GrayImage:
    """Bilinear resize to ``side x side`` with pixel-center alignment."""
    if side < 1:
        raise ValueError(f"side must be positive, got {side}")
    src = np.ascontiguousarray(img.pixels, dtype=np.float64)
    if src.shape == (side, side):
        return GrayImage(src, label=img.label)
    out = kernels.resize_bilinear(src, side, side)
    return GrayImage(np.clip(out, 0.0, 1.0), label=img.label)
