"""Optional numba acceleration.

All solver kernels are written in nopython-compatible numpy.  When numba
is missing (or NUMBA_DISABLE_JIT is set) the same functions run as plain
Python with identical semantics, just slower.
"""

from __future__ import annotations

try:
    from numba import njit as _njit

    def njit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        if func is None:
            return _njit(**kwargs)
        return _njit(**kwargs)(func)

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func

    HAVE_NUMBA = False
