"""Sparse-representation classification (SRC) and the nearest-neighbour
baseline.

The coding problem is

    minimize   lam * |z|_1 + |y - D z|_2^2

(no 1/2 on the quadratic), so the optimality conditions read
``2 D^T (y - D z) = lam * sign(z)`` on the support and ``|.| <= lam`` off it.
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Hashable, Optional, Sequence, Tuple

import numpy as np

from scenechar.matrix_ops import as_matrix

log = logging.getLogger(__name__)

ZERO_NORM = 1e-12
KKT_RTOL = 1e-6
DEFAULT_LAMBDA = 1e-2


def normalize_columns(atoms) -> np.ndarray:
    """Scale every column to unit L2 norm; zero columns are an error."""
    a = as_matrix(atoms, name="atoms")
    n = np.sqrt(np.sum(a * a, axis=0))
    bad = np.flatnonzero(n < ZERO_NORM)
    if bad.size:
        raise ValueError(f"column {int(bad[0])} has zero norm and cannot be normalized")
    return a / n


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Column-normalized training matrix with its class partition.

    ``labels[j]`` is the class of column ``j``; ``class_ids`` fixes the class
    order used for tie-breaking and for the residual vector.
    ``fingerprints`` identify the feature pipeline the atoms came from and are
    compared on use; ``meta`` is informational and carried through files.
    """

    atoms: np.ndarray
    labels: Tuple[Hashable, ...]
    class_ids: Tuple[Hashable, ...]
    fingerprints: Dict[str, str] = field(default_factory=dict)
    skipped: Tuple[str, ...] = ()
    meta: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        a = as_matrix(self.atoms, name="atoms")
        if len(self.labels) != a.shape[1]:
            raise ValueError(f"{len(self.labels)} labels for {a.shape[1]} columns")
        if len(set(self.class_ids)) != len(self.class_ids):
            raise ValueError("class_ids must be distinct")
        known = set(self.class_ids)
        stray = [c for c in self.labels if c not in known]
        if stray:
            raise ValueError(f"label {stray[0]!r} is not among class_ids")
        owned = set(self.labels)
        empty = [c for c in self.class_ids if c not in owned]
        if empty:
            raise ValueError(f"class {empty[0]!r} owns no columns")
        norms = np.sqrt(np.sum(a * a, axis=0))
        if np.max(np.abs(norms - 1.0)) > 1e-10:
            raise ValueError("dictionary columns must have unit L2 norm")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "class_ids", tuple(self.class_ids))
        masks = {c: np.array([lab == c for lab in self.labels]) for c in self.class_ids}
        object.__setattr__(self, "_masks", masks)
        gram = a.T @ a
        gram.flags.writeable = False
        object.__setattr__(self, "gram", gram)

    @classmethod
    def from_columns(cls, columns, labels: Sequence, class_ids=None, fingerprints=None, **kw):
        """Normalize ``columns`` and attach labels. ``class_ids`` defaults to
        order of first appearance in ``labels``."""
        if class_ids is None:
            class_ids = tuple(dict.fromkeys(labels))
        return cls(normalize_columns(columns), tuple(labels), tuple(class_ids), dict(fingerprints or {}), **kw)

    @property
    def dim(self) -> int:
        return self.atoms.shape[0]

    @property
    def size(self) -> int:
        return self.atoms.shape[1]

    def class_mask(self, cls_id) -> np.ndarray:
        return self._masks[cls_id]

    def class_sizes(self) -> Dict[Hashable, int]:
        return {c: int(self._masks[c].sum()) for c in self.class_ids}


def _atoms(d) -> np.ndarray:
    return d.atoms if isinstance(d, Dictionary) else as_matrix(d, name="dictionary")


def _vector(y, dim: int) -> np.ndarray:
    v = np.asarray(y, dtype=np.float64).ravel()
    if v.shape[0] != dim:
        raise ValueError(f"vector has {v.shape[0]} entries, dictionary rows are {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains non-finite entries")
    return v


def l1_objective(d, y, z, lam: float) -> float:
    D = _atoms(d)
    r = np.asarray(y, dtype=np.float64) - D @ z
    return float(lam * np.abs(z).sum() + r @ r)


@dataclass(frozen=True)
class KktReport:
    max_violation: float
    passed: bool


def kkt_check(d, y, z, lam: float) -> KktReport:
    """Largest violation of the optimality conditions at ``z``.

    Passes when the violation is at most ``1e-6 * max(1, lam)``.
    """
    D = _atoms(d)
    y = _vector(y, D.shape[0])
    z = np.asarray(z, dtype=np.float64)
    c = 2.0 * D.T @ (y - D @ z)
    act = z != 0
    viol = np.empty_like(c)
    viol[act] = np.abs(c[act] - lam * np.sign(z[act]))
    viol[~act] = np.maximum(0.0, np.abs(c[~act]) - lam)
    worst = float(viol.max()) if viol.size else 0.0
    return KktReport(worst, worst <= KKT_RTOL * max(1.0, lam))


@dataclass(frozen=True)
class HomotopyInfo:
    """Solver diagnostics. ``status`` is ``"ok"`` for a clean path solve and
    ``"degraded"`` when proximal-gradient refinement had to take over."""

    status: str
    breakpoints: int
    kkt: KktReport


def _solve_active(G, rhs):
    try:
        sol = np.linalg.solve(G, rhs)
        # atoms have unit norm, so huge coefficients only come from a
        # numerically singular active set
        if np.all(np.isfinite(sol)) and np.abs(sol).max() < 1e8:
            return sol
    except np.linalg.LinAlgError:
        pass
    # least-norm solution for a (nearly) singular active Gram matrix
    return np.linalg.lstsq(G, rhs, rcond=None)[0]


def _refine_prox(D, y, lam, z, iters=5000):
    """Accelerated proximal gradient (FISTA) warm-started at ``z``."""
    L = 2.0 * np.linalg.norm(D, 2) ** 2
    if L == 0:
        return z
    step = 1.0 / L
    x_prev = z.copy()
    w = z.copy()
    t = 1.0
    for _ in range(iters):
        g = -2.0 * D.T @ (y - D @ w)
        u = w - step * g
        x = np.sign(u) * np.maximum(np.abs(u) - lam * step, 0.0)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        w = x + ((t - 1.0) / t_next) * (x - x_prev)
        x_prev, t = x, t_next
        if kkt_check(D, y, x, lam).passed:
            break
    return x_prev


def homotopy_l1(d, y, lam: float, return_info: bool = False, max_breakpoints: Optional[int] = None):
    """Solve ``min lam*|z|_1 + |y - Dz|^2`` by following the solution path.

    The path starts at ``t = 2*|D^T y|_inf`` where ``z = 0`` is optimal and
    decreases ``t`` to ``lam``. Between breakpoints the active coefficients
    are affine in ``t``; at each breakpoint one atom either joins the active
    set (its correlation reaches ``t``) or leaves it (its coefficient hits
    zero).
    """
    D = _atoms(d)
    y = _vector(y, D.shape[0])
    lam = float(lam)
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    m = D.shape[1]
    if max_breakpoints is None:
        max_breakpoints = 20 * m + 100

    c0 = 2.0 * D.T @ y
    t = float(np.max(np.abs(c0))) if m else 0.0
    z = np.zeros(m)
    steps = 0
    status = "ok"
    if t <= lam:
        kkt = kkt_check(D, y, z, lam)
        return (z, HomotopyInfo(status, 0, kkt)) if return_info else z

    j0 = int(np.argmax(np.abs(c0)))
    active = [j0]
    signs = [float(np.sign(c0[j0]))]
    Dty = D.T @ y
    gram = d.gram if isinstance(d, Dictionary) else D.T @ D
    # the atom that changed status at the last breakpoint sits exactly on
    # its event boundary; rounding must not let it flip straight back
    last_added, last_dropped = j0, -1
    while True:
        A = np.array(active)
        s = np.array(signs)
        GA = gram[:, A]
        sol = _solve_active(GA[A], np.column_stack([Dty[A], 0.5 * s]))
        a, b = sol[:, 0], sol[:, 1]
        # c(t) = p + t q for every atom on this segment
        p = 2.0 * (Dty - GA @ a)
        q = 2.0 * (GA @ b)

        upper = t * (1.0 - 1e-12)
        best_t, best_kind, best_j = lam, None, -1
        inactive = np.ones(m, dtype=bool)
        inactive[A] = False
        if last_dropped >= 0:
            inactive[last_dropped] = False
        with np.errstate(divide="ignore", invalid="ignore"):
            cand_pos = p / (1.0 - q)
            cand_neg = -p / (1.0 + q)
        for cand in (cand_pos, cand_neg):
            ok = inactive & np.isfinite(cand) & (cand > best_t) & (cand < upper)
            if np.any(ok):
                idx = np.flatnonzero(ok)
                k = idx[np.argmax(cand[idx])]
                best_t, best_kind, best_j = float(cand[k]), "add", int(k)
        with np.errstate(divide="ignore", invalid="ignore"):
            cross = a / b
        ok = np.isfinite(cross) & (cross > best_t) & (cross < upper) & (A != last_added)
        if np.any(ok):
            idx = np.flatnonzero(ok)
            k = idx[np.argmax(cross[idx])]
            best_t, best_kind, best_j = float(cross[k]), "drop", int(k)

        if best_kind is None:
            z = np.zeros(m)
            z[A] = a - lam * b
            break
        if t - best_t < 1e-14 or steps >= max_breakpoints:
            log.warning("homotopy path stagnated at t=%.3e after %d breakpoints", t, steps)
            z = np.zeros(m)
            z[A] = a - best_t * b
            status = "degraded"
            break
        steps += 1
        t = best_t
        if best_kind == "add":
            c_j = p[best_j] + t * q[best_j]
            active.append(best_j)
            signs.append(float(np.sign(c_j)))
            last_added, last_dropped = best_j, -1
        else:
            last_added, last_dropped = -1, active[best_j]
            del active[best_j]
            del signs[best_j]
            if not active:
                # path returns to the origin; restart from the current t
                c = 2.0 * D.T @ y
                j = int(np.argmax(np.abs(c)))
                active, signs = [j], [float(np.sign(c[j]))]
                last_added, last_dropped = j, -1

    kkt = kkt_check(D, y, z, lam)
    if not kkt.passed:
        status = "degraded"
    if status == "degraded":
        z = _refine_prox(D, y, lam, z)
        kkt = kkt_check(D, y, z, lam)
    if return_info:
        return z, HomotopyInfo(status, steps, kkt)
    return z


def class_residuals(d: Dictionary, z, y) -> np.ndarray:
    """Squared residual ``|y - D_i z_i|^2`` for each class in ``class_ids`` order."""
    D = d.atoms
    y = _vector(y, D.shape[0])
    z = np.asarray(z, dtype=np.float64)
    out = np.empty(len(d.class_ids))
    for i, c in enumerate(d.class_ids):
        mask = d.class_mask(c)
        r = y - D[:, mask] @ z[mask]
        out[i] = r @ r
    return out


@dataclass(frozen=True, eq=False)
class SparseCode:
    z: np.ndarray
    objective: float
    residuals: np.ndarray
    predicted: Hashable
    lam: float
    status: str = "ok"

    @property
    def margin(self) -> float:
        """Gap between the two smallest class residuals."""
        if self.residuals.shape[0] < 2:
            return float("inf")
        r = np.sort(self.residuals)
        return float(r[1] - r[0])


def _unit(y, dim) -> np.ndarray:
    v = _vector(y, dim)
    n = float(np.linalg.norm(v))
    if n < ZERO_NORM:
        raise ValueError("test vector is zero and cannot be normalized")
    return v / n


def src_classify(d: Dictionary, y, lam: float = DEFAULT_LAMBDA) -> SparseCode:
    """Normalize ``y``, code it over all atoms, label by the smallest class residual."""
    y = _unit(y, d.dim)
    z, info = homotopy_l1(d, y, lam, return_info=True)
    res = class_residuals(d, z, y)
    # argmin returns the first minimum, i.e. the earliest class
    pred = d.class_ids[int(np.argmin(res))]
    return SparseCode(z, l1_objective(d, y, z, lam), res, pred, float(lam), info.status)


def nn_classify(d: Dictionary, y):
    """Label of the atom most correlated with normalized ``y``."""
    y = _unit(y, d.dim)
    return d.labels[int(np.argmax(d.atoms.T @ y))]


_MAGIC = b"SCENECHAR-DICT\x01"


def save_dictionary(path, d: Dictionary) -> None:
    """Write a self-describing binary file: magic, JSON header, raw float64 atoms."""
    header = {
        "shape": list(d.atoms.shape),
        "labels": [str(c) for c in d.labels],
        "class_ids": [str(c) for c in d.class_ids],
        "fingerprints": dict(sorted(d.fingerprints.items())),
        "skipped": list(d.skipped),
        "meta": dict(sorted(d.meta.items())),
    }
    hb = json.dumps(header, sort_keys=True).encode("utf-8")
    body = np.ascontiguousarray(d.atoms, dtype="<f8").tobytes()
    Path(path).write_bytes(_MAGIC + struct.pack("<Q", len(hb)) + hb + body)


def load_dictionary(path) -> Dictionary:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ValueError(f"cannot read dictionary {path}: {exc}") from exc
    if not data.startswith(_MAGIC):
        raise ValueError(f"{path} is not a dictionary file")
    off = len(_MAGIC)
    (hlen,) = struct.unpack("<Q", data[off : off + 8])
    off += 8
    header = json.loads(data[off : off + hlen].decode("utf-8"))
    off += hlen
    rows, cols = header["shape"]
    raw = data[off:]
    if len(raw) != rows * cols * 8:
        raise ValueError(f"{path}: truncated atom data")
    atoms = np.frombuffer(raw, dtype="<f8").reshape(rows, cols).astype(np.float64)
    return Dictionary(
        atoms,
        tuple(header["labels"]),
        tuple(header["class_ids"]),
        header["fingerprints"],
        tuple(header.get("skipped", ())),
        header.get("meta", {}),
    )
