"""Dense-matrix primitives used by the low-rank/sparse decomposition and the
sparse-coding classifier.

Matrices are plain 2-D ``numpy.ndarray`` objects of dtype float64. Every
public function rejects non-finite input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from scenechar import kernels

L0_TOL = 1e-12


class SvdError(RuntimeError):
    """Raised when the SVD routine fails to converge."""


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate ``m`` as a finite 2-D float64 array."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _check_threshold(lam: float) -> float:
    lam = float(lam)
    if not math.isfinite(lam) or lam < 0:
        raise ValueError(f"threshold must be a finite nonnegative number, got {lam}")
    return lam


def soft_threshold(a: float, lam: float) -> float:
    """Scalar shrinkage: move ``a`` toward zero by ``lam`` and clip at zero."""
    lam = _check_threshold(lam)
    a = float(a)
    if not math.isfinite(a):
        raise ValueError(f"soft_threshold argument must be finite, got {a}")
    if a > lam:
        return a - lam
    if a < -lam:
        return a + lam
    return 0.0


def soft_threshold_matrix(m, lam: float) -> np.ndarray:
    """Entrywise shrinkage; the minimizer of ``lam*|X|_1 + 0.5*|X - m|_F^2``."""
    lam = _check_threshold(lam)
    a = np.ascontiguousarray(as_matrix(m))
    return kernels.shrink(a, lam)


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``m = u @ diag(s) @ v.T`` with ``k = min(rows, cols)``."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


def svd(m) -> SvdFactors:
    """Thin SVD with a deterministic sign convention.

    The first entry of each column of ``u`` whose magnitude exceeds 1e-12 is
    made nonnegative; the matching column of ``v`` is flipped with it.
    """
    a = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdError(f"SVD did not converge: {exc}") from exc
    v = vt.T.copy()
    nz = np.abs(u) > L0_TOL
    first = np.argmax(nz, axis=0)
    lead = u[first, np.arange(u.shape[1])]
    flip = lead < 0
    u[:, flip] *= -1.0
    v[:, flip] *= -1.0
    return SvdFactors(u=u, s=s, v=v)


def svt(m, tau: float) -> np.ndarray:
    """Singular value thresholding, the proximal map of ``tau*|X|_*``."""
    tau = _check_threshold(tau)
    f = svd(m)
    s = np.maximum(f.s - tau, 0.0)
    keep = s > 0
    if not np.any(keep):
        return np.zeros((f.u.shape[0], f.v.shape[0]))
    return (f.u[:, keep] * s[keep]) @ f.v[:, keep].T


def nuclear_norm(m) -> float:
    return float(np.sum(svd(m).s))


def norms(m) -> dict:
    """Nuclear, entrywise l1, Frobenius norms and the l0 count of ``m``."""
    a = as_matrix(m)
    return {
        "nuclear": nuclear_norm(a),
        "l1": float(np.abs(a).sum()),
        "frobenius": float(np.sqrt(np.sum(a * a))),
        "l0": int(np.count_nonzero(np.abs(a) > L0_TOL)),
    }


def read_matrix(path) -> np.ndarray:
    """Read the ``rows cols`` header + whitespace-separated rows text format."""
    path = Path(path)
    try:
        lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise ValueError(f"cannot read matrix file {path}: {exc}") from exc
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    try:
        rows, cols = (int(t) for t in lines[0].split())
    except ValueError:
        raise ValueError(f"{path}: first line must be 'rows cols'") from None
    if len(lines) - 1 != rows:
        raise ValueError(f"{path}: expected {rows} data rows, found {len(lines) - 1}")
    data = []
    for i, ln in enumerate(lines[1:], start=2):
        vals = ln.split()
        if len(vals) != cols:
            raise ValueError(f"{path}:{i}: expected {cols} values, found {len(vals)}")
        data.append([float(v) for v in vals])
    return as_matrix(np.array(data, dtype=np.float64), name=str(path))


def write_matrix(path, m) -> None:
    a = as_matrix(m)
    out = [f"{a.shape[0]} {a.shape[1]}"]
    out.extend(" ".join(repr(float(x)) for x in row) for row in a)
    Path(path).write_text("\n".join(out) + "\n")
