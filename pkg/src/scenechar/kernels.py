"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it was built; otherwise the
numpy fallback in ``_pykernels`` is used. Set ``SCENECHAR_KERNELS=python`` to
force the fallback (used by the benchmark and the kernel agreement tests).
"""
import os

from scenechar import _pykernels

BACKEND = "python"
if os.environ.get("SCENECHAR_KERNELS", "").lower() != "python":
    try:
        from scenechar import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

shrink = _impl.shrink
cell_histograms = _impl.cell_histograms
resize_bilinear = _impl.resize_bilinear
