"""Low-rank plus sparse decomposition by the inexact augmented Lagrange
multiplier method, and its use as a per-image denoiser.

Each outer iteration solves both subproblems once::

    X0 <- svt(X - E + Y/mu, 1/mu)
    E  <- shrink(X - X0 + Y/mu, lam/mu)
    Y  <- Y + mu * (X - X0 - E)
    mu <- min(rho * mu, mu_cap)

and stops when ``|X - X0 - E|_F / |X|_F <= tol``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from scenechar.image import GrayImage
from scenechar.matrix_ops import as_matrix, soft_threshold_matrix, svd, svt


def default_lambda(rows: int, cols: int) -> float:
    """``1 / sqrt(max(rows, cols))``."""
    if int(rows) < 1 or int(cols) < 1:
        raise ValueError(f"dimensions must be positive, got ({rows}, {cols})")
    return 1.0 / math.sqrt(max(int(rows), int(cols)))


@dataclass(frozen=True)
class RpcaConfig:
    """Solver settings. ``lam`` and ``mu0`` default to data-dependent rules
    when left as ``None``: ``default_lambda`` and ``1.25 / sigma_max(X)``.

    ``mode`` selects how the denoiser forms its matrix: ``"per_image"``
    decomposes each image grid on its own, ``"stacked"`` stacks vectorized
    images column-wise and decomposes them jointly.
    """

    lam: Optional[float] = None
    mu0: Optional[float] = None
    rho: float = 1.5
    mu_cap: float = 1e5
    tol: float = 1e-7
    max_iter: int = 500
    mode: str = "per_image"

    def __post_init__(self):
        if self.lam is not None and not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.rho > 1:
            raise ValueError(f"rho must exceed 1, got {self.rho}")
        if not (self.mu_cap > 0 and math.isfinite(self.mu_cap)):
            raise ValueError(f"mu_cap must be positive, got {self.mu_cap}")
        if self.mu0 is not None and not 0 < self.mu0 <= self.mu_cap:
            raise ValueError(f"mu0 must lie in (0, mu_cap], got {self.mu0}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.mode not in ("per_image", "stacked"):
            raise ValueError(f"mode must be 'per_image' or 'stacked', got {self.mode!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RpcaResult:
    low_rank: np.ndarray
    sparse: np.ndarray
    iterations: int
    converged: bool
    residual: float


@dataclass(frozen=True)
class IterationState:
    """Snapshot handed to ``rpca_decompose`` callbacks after each iteration.

    ``e_prev`` and ``y_prev`` are the iterates the subproblems were posed
    with; ``mu`` is the penalty used in this iteration and ``mu_next`` the
    value after the update.
    """

    k: int
    mu: float
    mu_next: float
    low_rank: np.ndarray
    sparse: np.ndarray
    e_prev: np.ndarray
    y_prev: np.ndarray
    y: np.ndarray
    residual: float


def rpca_decompose(
    x,
    config: RpcaConfig = RpcaConfig(),
    callback: Optional[Callable[[IterationState], None]] = None,
) -> RpcaResult:
    x = as_matrix(x, name="rpca input")
    norm_x = float(np.linalg.norm(x))
    if norm_x == 0.0:
        z = np.zeros_like(x)
        return RpcaResult(z, z.copy(), iterations=0, converged=True, residual=0.0)

    lam = config.lam if config.lam is not None else default_lambda(*x.shape)
    if config.mu0 is not None:
        mu = config.mu0
    else:
        mu = min(1.25 / svd(x).s[0], config.mu_cap)

    y = np.zeros_like(x)
    e = np.zeros_like(x)
    x0 = np.zeros_like(x)
    residual = 1.0
    converged = False
    k = 0
    for k in range(1, int(config.max_iter) + 1):
        x0 = svt(x - e + y / mu, 1.0 / mu)
        e_new = soft_threshold_matrix(x - x0 + y / mu, lam / mu)
        r = x - x0 - e_new
        y_new = y + mu * r
        residual = float(np.linalg.norm(r)) / norm_x
        mu_next = min(config.rho * mu, config.mu_cap)
        if callback is not None:
            callback(IterationState(k, mu, mu_next, x0, e_new, e, y, y_new, residual))
        e, y, mu = e_new, y_new, mu_next
        if residual <= config.tol:
            converged = True
            break
    return RpcaResult(x0, e, iterations=k, converged=converged, residual=residual)


def denoise_image(img: GrayImage, config: RpcaConfig = RpcaConfig(), side: int = 32):
    """Split one square image into a clean low-rank image and a sparse noise term.

    Returns ``(clean, noise)`` where ``clean`` is the low-rank part clamped to
    [0, 1] and ``noise`` the raw sparse part.
    """
    h, w = img.pixels.shape
    if h != w or h != side:
        raise ValueError(f"denoise_image expects a {side}x{side} image, got {h}x{w}")
    res = rpca_decompose(img.pixels, config)
    clean = GrayImage(np.clip(res.low_rank, 0.0, 1.0), label=img.label)
    return clean, res.sparse


def denoise_stack(images: Sequence[GrayImage], config: RpcaConfig = RpcaConfig()):
    """Joint decomposition of same-size images stacked as columns.

    Returns a list of ``(clean, noise)`` pairs in input order.
    """
    if not images:
        return []
    shape = images[0].pixels.shape
    if any(im.pixels.shape != shape for im in images):
        raise ValueError("stacked denoising needs images of identical size")
    cols = np.stack([im.pixels.ravel() for im in images], axis=1)
    res = rpca_decompose(cols, config)
    out = []
    for j, im in enumerate(images):
        clean = np.clip(res.low_rank[:, j].reshape(shape), 0.0, 1.0)
        out.append((GrayImage(clean, label=im.label), res.sparse[:, j].reshape(shape)))
    return out
