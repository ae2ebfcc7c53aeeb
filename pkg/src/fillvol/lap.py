"""Assignment-kernel selection.

The compiled kernel is used when importable; set ``FILLVOL_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

import numpy as np

from . import _lap_py

try:
    if os.environ.get("FILLVOL_PURE_PYTHON"):
        raise ImportError("pure-python mode requested")
    from . import _lap_ext as _kernel

    BACKEND = "cython"
except ImportError:
    _kernel = _lap_py
    BACKEND = "python"


def solve_assignment(cost, backend=None):
    """Solve a rectangular assignment problem; see :func:`fillvol._lap_py.solve`."""
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    if backend == "python":
        return _lap_py.solve(cost)
    if backend == "cython":
        if BACKEND != "cython":
            raise RuntimeError("compiled kernel not available")
        return _kernel.solve(cost)
    return _kernel.solve(cost)
