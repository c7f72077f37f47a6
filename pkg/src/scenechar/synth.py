"""Procedural character glyphs for desk-scale experiments.

Glyphs are stroke skeletons (polylines) in a unit box with x to the right and
y downward. Rendering takes the distance from each pixel center to the
skeleton under a random similarity transform and maps it to ink coverage with
a one-pixel anti-aliased rim.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from scenechar.image import write_pgm

BACKGROUND = 0.2
INK = 0.8
STROKE_HALF_WIDTH = 1.4  # pixels, at 32x32


def _arc(cx, cy, rx, ry, a0, a1, n=16):
    t = np.radians(np.linspace(a0, a1, n))
    return [(cx + rx * math.cos(a), cy + ry * math.sin(a)) for a in t]


_L, _R, _T, _B, _M = 0.25, 0.75, 0.15, 0.85, 0.5

GLYPHS: Dict[str, List[list]] = {
    "0": [_arc(0.5, 0.5, 0.25, 0.35, 0, 360, 32)],
    "1": [[(0.38, 0.28), (0.52, _T), (0.52, _B)], [(0.36, _B), (0.68, _B)]],
    "2": [_arc(0.5, 0.33, 0.24, 0.18, 180, 380, 14) + [(_L, _B), (_R, _B)]],
    "3": [_arc(0.48, 0.32, 0.22, 0.17, 200, 450, 14), _arc(0.48, 0.67, 0.25, 0.18, 270, 520, 14)],
    "4": [[(0.62, _B), (0.62, _T), (_L, 0.62), (_R + 0.04, 0.62)]],
    "5": [[(_R, _T), (0.3, _T), (0.28, 0.47)] + _arc(0.48, 0.64, 0.25, 0.2, 235, 500, 16)],
    "6": [_arc(0.52, 0.5, 0.24, 0.35, 300, 180, 10) + _arc(0.5, 0.66, 0.24, 0.19, 180, 540, 20)],
    "7": [[(_L, _T), (_R, _T), (0.42, _B)]],
    "8": [_arc(0.5, 0.32, 0.2, 0.17, 0, 360, 24), _arc(0.5, 0.67, 0.24, 0.18, 0, 360, 24)],
    "9": [_arc(0.5, 0.34, 0.23, 0.19, 0, 360, 24), [(0.73, 0.34), (0.62, _B)]],
    "A": [[(_L - 0.03, _B), (_M, _T), (_R + 0.03, _B)], [(0.35, 0.6), (0.65, 0.6)]],
    "B": [[(0.28, _T), (0.28, _B)]] + [[(0.28, _T)] + _arc(0.52, 0.32, 0.2, 0.17, 270, 450, 10) + [(0.28, 0.49)]]
    + [[(0.28, 0.49)] + _arc(0.54, 0.67, 0.22, 0.18, 270, 450, 10) + [(0.28, _B)]],
    "C": [_arc(0.53, 0.5, 0.26, 0.35, 45, 315, 24)],
    "D": [[(0.28, _T), (0.28, _B)], [(0.28, _T)] + _arc(0.4, 0.5, 0.33, 0.35, 270, 450, 20) + [(0.28, _B)]],
    "E": [[(_R, _T), (0.3, _T), (0.3, _B), (_R, _B)], [(0.3, _M), (0.66, _M)]],
    "F": [[(_R, _T), (0.3, _T), (0.3, _B)], [(0.3, _M), (0.66, _M)]],
    "G": [_arc(0.52, 0.5, 0.26, 0.35, 320, 40, 24) + [(0.76, 0.55), (0.56, 0.55)]],
    "H": [[(_L, _T), (_L, _B)], [(_R, _T), (_R, _B)], [(_L, _M), (_R, _M)]],
    "I": [[(_M, _T), (_M, _B)], [(0.35, _T), (0.65, _T)], [(0.35, _B), (0.65, _B)]],
    "J": [[(0.65, _T), (0.65, 0.65)] + _arc(0.47, 0.65, 0.18, 0.2, 0, 160, 10)],
    "K": [[(0.28, _T), (0.28, _B)], [(_R, _T), (0.28, 0.58)], [(0.42, 0.46), (_R, _B)]],
    "L": [[(0.3, _T), (0.3, _B), (_R, _B)]],
    "M": [[(0.22, _B), (0.22, _T), (_M, 0.6), (0.78, _T), (0.78, _B)]],
    "N": [[(_L, _B), (_L, _T), (_R, _B), (_R, _T)]],
    "O": [_arc(0.5, 0.5, 0.28, 0.35, 0, 360, 32)],
    "P": [[(0.3, _B), (0.3, _T)] + _arc(0.48, 0.33, 0.22, 0.18, 270, 450, 12) + [(0.3, 0.51)]],
    "Q": [_arc(0.5, 0.48, 0.27, 0.33, 0, 360, 32), [(0.55, 0.65), (0.8, 0.88)]],
    "R": [[(0.3, _B), (0.3, _T)] + _arc(0.48, 0.33, 0.22, 0.18, 270, 450, 12) + [(0.3, 0.51), (_R, _B)]],
    "S": [_arc(0.5, 0.32, 0.22, 0.17, 340, 90, 14) + _arc(0.5, 0.67, 0.22, 0.18, 270, 520, 14)],
    "T": [[(0.22, _T), (0.78, _T)], [(_M, _T), (_M, _B)]],
    "U": [[(_L, _T), (_L, 0.6)] + _arc(_M, 0.6, 0.25, 0.25, 180, 0, 14) + [(_R, _T)]],
    "V": [[(0.22, _T), (_M, _B), (0.78, _T)]],
    "W": [[(0.15, _T), (0.32, _B), (_M, 0.4), (0.68, _B), (0.85, _T)]],
    "X": [[(_L, _T), (_R, _B)], [(_R, _T), (_L, _B)]],
    "Y": [[(_L, _T), (_M, _M), (_R, _T)], [(_M, _M), (_M, _B)]],
    "Z": [[(_L, _T), (_R, _T), (_L, _B), (_R, _B)]],
}

DEFAULT_CLASSES = tuple("0123456789")


@dataclass(frozen=True)
class NoiseSpec:
    gaussian_sigma: float = 0.0
    salt_pepper: float = 0.0

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise ValueError("gaussian_sigma must be nonnegative")
        if not 0.0 <= self.salt_pepper <= 1.0:
            raise ValueError("salt_pepper must lie in [0, 1]")


@dataclass(frozen=True)
class Sample:
    clean: np.ndarray
    noisy: np.ndarray
    salt_pepper_mask: np.ndarray


def _segments(glyph: str) -> np.ndarray:
    try:
        strokes = GLYPHS[glyph]
    except KeyError:
        raise ValueError(f"no glyph defined for {glyph!r}; available: {''.join(sorted(GLYPHS))}") from None
    segs = []
    for poly in strokes:
        pts = np.asarray(poly, dtype=np.float64)
        segs.extend(zip(pts[:-1], pts[1:]))
    return np.array(segs)  # (n, 2, 2)


def render_glyph(glyph: str, side: int = 32, scale=1.0, angle_deg=0.0, shift=(0.0, 0.0)) -> np.ndarray:
    """Anti-aliased rendering of ``glyph`` under a similarity transform about
    the image center. ``shift`` is in pixels as ``(dx, dy)``."""
    segs = _segments(glyph) * side  # unit box -> pixel coordinates
    c = side / 2.0
    th = math.radians(angle_deg)
    rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    segs = (segs - c) @ rot.T * scale + c + np.asarray(shift, dtype=np.float64)
    ys, xs = np.mgrid[0:side, 0:side] + 0.5
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
    a = segs[:, 0][None]  # (1, n, 2)
    ab = (segs[:, 1] - segs[:, 0])[None]
    ap = pts[:, None, :] - a
    denom = np.maximum(np.sum(ab * ab, axis=2), 1e-12)
    t = np.clip(np.sum(ap * ab, axis=2) / denom, 0.0, 1.0)
    dist = np.linalg.norm(ap - t[..., None] * ab, axis=2).min(axis=1)
    hw = STROKE_HALF_WIDTH * side / 32.0 * scale
    cover = np.clip(hw + 0.5 - dist, 0.0, 1.0).reshape(side, side)
    return BACKGROUND + (INK - BACKGROUND) * cover


def make_sample(glyph: str, rng: np.random.Generator, noise: NoiseSpec = NoiseSpec(), side: int = 32) -> Sample:
    """One jittered render plus its noisy version and salt-and-pepper mask.

    Jitter: scale in [0.9, 1.1], rotation in [-10, 10] degrees, translation in
    [-2, 2] pixels per axis. Gaussian noise is added first, then each pixel is
    independently replaced by 0 or 1 with probability ``salt_pepper``.
    """
    scale = rng.uniform(0.9, 1.1)
    angle = rng.uniform(-10.0, 10.0)
    shift = rng.uniform(-2.0, 2.0, size=2) * side / 32.0
    clean = render_glyph(glyph, side, scale, angle, shift)
    noisy = clean.copy()
    if noise.gaussian_sigma > 0:
        noisy = noisy + rng.normal(0.0, noise.gaussian_sigma, size=noisy.shape)
    mask = rng.random(noisy.shape) < noise.salt_pepper
    salt = rng.random(noisy.shape) < 0.5
    noisy = np.where(mask, np.where(salt, 1.0, 0.0), noisy)
    return Sample(clean, np.clip(noisy, 0.0, 1.0), mask)


def _rng(seed: int, class_index: int, split: str, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), class_index, 0 if split == "train" else 1, index])


def synth_corpus(
    out_dir,
    classes: Sequence[str] = DEFAULT_CLASSES,
    per_class: int = 20,
    noise: NoiseSpec = NoiseSpec(),
    seed: int = 0,
    test_per_class: int | None = None,
    side: int = 32,
) -> Path:
    """Render a train/test corpus under ``out_dir`` and write ``manifest.csv``.

    Images go to ``<split>/<class>/<class>_<index>.pgm``; each image draws
    from its own generator keyed on (seed, class, split, index), so the
    output does not depend on rendering order. Returns the manifest path.
    """
    if int(per_class) < 2:
        raise ValueError(f"per_class must be at least 2, got {per_class}")
    if not classes:
        raise ValueError("at least one glyph class is required")
    for g in classes:
        _segments(g)
    if len(set(classes)) != len(classes):
        raise ValueError("glyph classes must be distinct")
    n_test = per_class if test_per_class is None else int(test_per_class)
    out = Path(out_dir)
    rows = []
    for ci, g in enumerate(classes):
        for split, count in (("train", per_class), ("test", n_test)):
            d = out / split / g
            d.mkdir(parents=True, exist_ok=True)
            for i in range(count):
                s = make_sample(g, _rng(seed, ci, split, i), noise, side)
                rel = Path(split) / g / f"{g}_{i:04d}.pgm"
                write_pgm(out / rel, s.noisy)
                rows.append((rel.as_posix(), g, split))
    manifest = out / "manifest.csv"
    with manifest.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "class", "split"])
        w.writerows(rows)
    return manifest
