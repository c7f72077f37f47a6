"""Compare the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat N]

Prints per-call times for each kernel and the time to compute HOG
descriptors for a batch of images under each backend. The batch timing runs
in a subprocess with ``SCENECHAR_KERNELS`` set, so it exercises the real
import-time selection.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from scenechar import _pykernels

try:
    from scenechar import _ckernels
except ImportError:
    _ckernels = None

BATCH = """
import time, numpy as np
from scenechar import kernels
from scenechar.hog import hog_descriptor
from scenechar.image import GrayImage, resize_bilinear
g = np.random.default_rng(0)
imgs = [GrayImage(g.random((48, 40))) for _ in range(500)]
t = time.perf_counter()
for im in imgs:
    hog_descriptor(resize_bilinear(im, 32))
print(kernels.BACKEND, time.perf_counter() - t)
"""


def bench(fn, repeat):
    n, _ = timeit.Timer(fn).autorange()
    best = min(timeit.repeat(fn, number=n, repeat=repeat))
    return best / n


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    g = np.random.default_rng(0)
    mat = g.normal(size=(32, 32))
    big = g.normal(size=(1024, 200))
    mag = g.random((32, 32))
    ori = g.uniform(0, 180, size=(32, 32))
    src = g.random((64, 48))
    cases = {
        "shrink 32x32": lambda k: k.shrink(mat, 0.1),
        "shrink 1024x200": lambda k: k.shrink(big, 0.1),
        "cell_histograms 32x32": lambda k: k.cell_histograms(mag, ori, 8, 9, 180.0),
        "resize 64x48 -> 32x32": lambda k: k.resize_bilinear(src, 32, 32),
    }
    print(f"{'kernel':<24}{'python (us)':>14}{'cython (us)':>14}{'speedup':>10}")
    for name, call in cases.items():
        tp = bench(lambda: call(_pykernels), args.repeat) * 1e6
        if _ckernels is None:
            print(f"{name:<24}{tp:>14.2f}{'n/a':>14}{'':>10}")
            continue
        tc = bench(lambda: call(_ckernels), args.repeat) * 1e6
        print(f"{name:<24}{tp:>14.2f}{tc:>14.2f}{tp / tc:>9.1f}x")

    print()
    print("resize + HOG on 500 images:")
    for backend in ("python", "cython"):
        env = dict(os.environ, SCENECHAR_KERNELS=backend)
        out = subprocess.run([sys.executable, "-c", BATCH], env=env, capture_output=True, text=True, check=True)
        used, secs = out.stdout.split()
        print(f"  requested {backend:<7} used {used:<7} {float(secs):.3f} s")


if __name__ == "__main__":
    main()
