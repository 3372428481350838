"""Backend selection for the compiled kernels.

Set ``PSTABLE_DISABLE_NUMBA=1`` before import to force the pure-numpy path.
"""

import os

_DISABLED = os.environ.get("PSTABLE_DISABLE_NUMBA", "0").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled by PSTABLE_DISABLE_NUMBA")
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    _njit = None


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise return the function untouched."""
    if HAVE_NUMBA:
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"


def max_threads() -> int:
    """Worker cap from ``PSTABLE_THREADS`` (defaults to the CPU count)."""
    raw = os.environ.get("PSTABLE_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1
