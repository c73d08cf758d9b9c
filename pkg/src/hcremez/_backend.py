"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy twins.
Set ``HCREMEZ_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from hcremez import _pykernels

if os.environ.get("HCREMEZ_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    COMPILED = False
else:
    try:
        from hcremez import _ckernels as _impl
        COMPILED = True
    except ImportError:  # extension not built
        _impl = _pykernels
        COMPILED = False

BACKEND = "cython" if COMPILED else "python"

sparse_convolve = _impl.sparse_convolve


def separable_reduce(U, W, wrow, wcol, powers):
    # complex factors run faster through numpy's zgemm path
    if np.iscomplexobj(U) or np.iscomplexobj(W):
        return _pykernels.separable_reduce(U, W, wrow, wcol, powers)
    return _impl.separable_reduce(U, W, wrow, wcol, powers)

