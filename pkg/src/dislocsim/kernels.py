"""Kernel backend selection.

The compiled extension is preferred; set ``DISLOCSIM_PURE=1`` to force the
numpy fallback (useful for benchmarking and for cross-checking the two).
"""
import os

from . import _kernels_py

BACKEND = "python"

if not os.environ.get("DISLOCSIM_PURE"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

thomas = _impl.thomas
holder_pairs = _impl.holder_pairs
bmo_sweep = _impl.bmo_sweep

__all__ = ["BACKEND", "thomas", "holder_pairs", "bmo_sweep"]
