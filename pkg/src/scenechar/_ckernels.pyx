# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Pure numpy equivalents live in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


def shrink(const double[:, ::1] a, double lam):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], i, j
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double v
    with nogil:
        for i in range(n):
            for j in range(m):
                v = a[i, j]
                if v > lam:
                    o[i, j] = v - lam
                elif v < -lam:
                    o[i, j] = v + lam
                else:
                    o[i, j] = 0.0
    return out


def cell_histograms(const double[:, :] mag, const double[:, :] ori,
                    Py_ssize_t cell_size, Py_ssize_t bins, double period):
    cdef Py_ssize_t ny = mag.shape[0] // cell_size
    cdef Py_ssize_t nx = mag.shape[1] // cell_size
    out = np.zeros((ny, nx, bins), dtype=np.float64)
    cdef double[:, :, ::1] h = out
    cdef double width = period / bins
    cdef double pos, frac, m
    cdef Py_ssize_t y, x, lo, hi, cy, cx
    with nogil:
        for y in range(ny * cell_size):
            cy = y // cell_size
            for x in range(nx * cell_size):
                m = mag[y, x]
                pos = ori[y, x] / width - 0.5
                lo = <Py_ssize_t>floor(pos)
                frac = pos - lo
                lo = lo % bins
                if lo < 0:
                    lo += bins
                hi = (lo + 1) % bins
                cx = x // cell_size
                h[cy, cx, lo] += (1.0 - frac) * m
                h[cy, cx, hi] += frac * m
    return out


def resize_bilinear(const double[:, :] src, Py_ssize_t out_h, Py_ssize_t out_w):
    cdef Py_ssize_t h = src.shape[0], w = src.shape[1]
    cdef double sy = <double>h / out_h, sx = <double>w / out_w
    out = np.empty((out_h, out_w), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, y0, x0, y1, x1
    cdef double y, x, fy, fx, top, bot
    with nogil:
        for i in range(out_h):
            y = (i + 0.5) * sy - 0.5
            if y < 0:
                y = 0.0
            if y > h - 1:
                y = h - 1
            y0 = <Py_ssize_t>floor(y)
            y1 = y0 + 1 if y0 + 1 < h else h - 1
            fy = y - y0
            for j in range(out_w):
                x = (j + 0.5) * sx - 0.5
                if x < 0:
                    x = 0.0
                if x > w - 1:
                    x = w - 1
                x0 = <Py_ssize_t>floor(x)
                x1 = x0 + 1 if x0 + 1 < w else w - 1
                fx = x - x0
                top = src[y0, x0] * (1.0 - fx) + src[y0, x1] * fx
                bot = src[y1, x0] * (1.0 - fx) + src[y1, x1] * fx
                o[i, j] = top * (1.0 - fy) + bot * fy
    return out
