"""Optional numba acceleration.

Set ``CARVEBENCH_NO_NUMBA=1`` to force the pure-numpy kernels even when numba
is installed. The flag is read once, at import time.
"""
from __future__ import annotations

import os

_DISABLED = os.environ.get("CARVEBENCH_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by CARVEBENCH_NO_NUMBA")
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    _njit = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA


def jit(func):
    """Compile ``func`` in nopython/nogil mode, or return None without numba."""
    if _njit is None:
        return None
    return _njit(cache=True, nogil=True)(func)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
