"""Numba switch.

Set ``ESR_TWIN_DISABLE_NUMBA=1`` to run the pure numpy/scipy fallbacks.
"""

import os

_FLAG = os.environ.get("ESR_TWIN_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(fn):
    """Compile with numba when available; the plain function is kept as ``.py_func``."""
    if not HAVE_NUMBA:
        fn.py_func = fn
        return fn
    return numba.njit(cache=True, nogil=True, fastmath=False)(fn)
