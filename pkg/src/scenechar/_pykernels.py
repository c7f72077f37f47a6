"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``.

Both modules expose the same functions with the same argument order and must
agree to rounding error; ``tests/test_kernels.py`` checks that.
"""
import numpy as np


def shrink(a, lam):
    return np.sign(a) * np.maximum(np.abs(a) - lam, 0.0)


def cell_histograms(mag, ori, cell_size, bins, period):
    h, w = mag.shape
    ny, nx = h // cell_size, w // cell_size
    mag = mag[: ny * cell_size, : nx * cell_size]
    ori = ori[: ny * cell_size, : nx * cell_size]
    width = period / bins
    pos = ori / width - 0.5
    lo = np.floor(pos)
    frac = pos - lo
    lo = lo.astype(np.intp) % bins
    hi = (lo + 1) % bins
    cy = np.arange(ny * cell_size) // cell_size
    cx = np.arange(nx * cell_size) // cell_size
    cell = (cy[:, None] * nx + cx[None, :]).ravel()
    out = np.zeros(ny * nx * bins)
    np.add.at(out, cell * bins + lo.ravel(), ((1.0 - frac) * mag).ravel())
    np.add.at(out, cell * bins + hi.ravel(), (frac * mag).ravel())
    return out.reshape(ny, nx, bins)


def resize_bilinear(src, out_h, out_w):
    h, w = src.shape
    sy, sx = h / out_h, w / out_w
    y = np.clip((np.arange(out_h) + 0.5) * sy - 0.5, 0.0, h - 1)
    x = np.clip((np.arange(out_w) + 0.5) * sx - 0.5, 0.0, w - 1)
    y0 = np.floor(y).astype(np.intp)
    x0 = np.floor(x).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (y - y0)[:, None]
    fx = (x - x0)[None, :]
    top = src[y0][:, x0] * (1.0 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1.0 - fx) + src[y1][:, x1] * fx
    return top * (1.0 - fy) + bot * fy
