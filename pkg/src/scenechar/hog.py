"""A simple histogram-of-oriented-gradients descriptor.

Pipeline: centered-difference gradients with replicated borders, per-cell
orientation histograms with linear interpolation between the two nearest bin
centers, overlapping blocks of cells L2-normalized with an epsilon.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Tuple

import numpy as np

from scenechar import kernels
from scenechar.image import GrayImage


@dataclass(frozen=True)
class HogConfig:
    cell_size: int = 8
    bins: int = 9
    block_size: int = 2
    block_stride: int = 1
    signed: bool = False
    norm_epsilon: float = 1e-6

    def __post_init__(self):
        for name in ("cell_size", "bins", "block_size", "block_stride"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.norm_epsilon > 0:
            raise ValueError("norm_epsilon must be positive")

    @property
    def period(self) -> float:
        return 360.0 if self.signed else 180.0

    def geometry(self, side: int) -> Tuple[int, int]:
        """Return ``(cells_per_side, blocks_per_side)`` for a square image."""
        if side % self.cell_size:
            raise ValueError(f"image side {side} not divisible by cell_size {self.cell_size}")
        cells = side // self.cell_size
        if self.block_size > cells:
            raise ValueError(f"block_size {self.block_size} exceeds {cells} cells per side")
        blocks = (cells - self.block_size) // self.block_stride + 1
        return cells, blocks

    def descriptor_length(self, side: int = 32) -> int:
        _, blocks = self.geometry(side)
        return blocks * blocks * self.block_size**2 * self.bins

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class HogDescriptor:
    """Flattened ``(blocks_y, blocks_x, block_size**2, bins)`` feature vector."""

    values: np.ndarray
    layout: Tuple[int, int, int, int]

    def __len__(self):
        return self.values.shape[0]


def gradients(img: GrayImage, signed: bool = False):
    """Gradient magnitude and orientation in degrees.

    Derivatives are ``(I[x+1] - I[x-1]) / 2`` along each axis with edge
    pixels replicated. Orientation is ``atan2(gy, gx)`` wrapped into
    ``[0, 180)`` (or ``[0, 360)`` when ``signed``). ``gy`` is positive toward
    increasing row index.
    """
    p = np.pad(np.asarray(img.pixels, dtype=np.float64), 1, mode="edge")
    gx = 0.5 * (p[1:-1, 2:] - p[1:-1, :-2])
    gy = 0.5 * (p[2:, 1:-1] - p[:-2, 1:-1])
    mag = np.hypot(gx, gy)
    period = 360.0 if signed else 180.0
    ori = np.mod(np.degrees(np.arctan2(gy, gx)), period)
    ori[ori >= period] -= period
    return mag, ori


def cell_histograms(magnitude, orientation, config: HogConfig = HogConfig()) -> np.ndarray:
    """Per-cell orientation histograms, shape ``(cells_y, cells_x, bins)``.

    Bin ``i`` is centered at ``(i + 0.5) * period / bins``; each pixel splits
    its magnitude between the two bracketing centers (wrapping around the
    period) in proportion to angular proximity.
    """
    mag = np.ascontiguousarray(magnitude, dtype=np.float64)
    ori = np.ascontiguousarray(orientation, dtype=np.float64)
    if mag.shape != ori.shape:
        raise ValueError("magnitude and orientation shapes differ")
    return kernels.cell_histograms(mag, ori, config.cell_size, config.bins, config.period)


def hog_descriptor(img: GrayImage, config: HogConfig = HogConfig()) -> HogDescriptor:
    h, w = img.pixels.shape
    if h != w:
        raise ValueError(f"HOG expects a square image, got {h}x{w}")
    _, nb = config.geometry(h)
    mag, ori = gradients(img, config.signed)
    hist = cell_histograms(mag, ori, config)
    bs, st = config.block_size, config.block_stride
    eps2 = config.norm_epsilon**2
    out = np.empty((nb, nb, bs * bs, config.bins))
    for by in range(nb):
        for bx in range(nb):
            v = hist[by * st : by * st + bs, bx * st : bx * st + bs].reshape(bs * bs, config.bins)
            out[by, bx] = v / math.sqrt(float(np.sum(v * v)) + eps2)
    layout = (nb, nb, bs * bs, config.bins)
    return HogDescriptor(values=out.ravel(), layout=layout)
