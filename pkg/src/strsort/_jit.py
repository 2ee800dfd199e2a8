"""Kernel compilation switch.

Hot loops are written once as plain Python over numpy arrays and compiled with
numba when it is importable. Setting ``STRSORT_DISABLE_JIT=1`` in the
environment (before import) runs the very same functions interpreted, which is
slow but dependency-light and useful for debugging and for the backend
benchmark.
"""
from __future__ import annotations

import os

DISABLE_ENV = "STRSORT_DISABLE_JIT"

try:  # pragma: no cover - exercised implicitly by the whole test suite
    import numba
except ImportError:  # pragma: no cover
    numba = None

JIT_ENABLED = numba is not None and os.environ.get(DISABLE_ENV, "0") in ("", "0")
BACKEND = "numba" if JIT_ENABLED else "python"


def jit(func):
    """Compile ``func`` with numba (nogil, cached) or return it unchanged."""
    if not JIT_ENABLED:
        return func
    return numba.njit(cache=True, nogil=True)(func)

