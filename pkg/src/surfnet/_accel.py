"""Numba switch shared by the hot kernels.

Set ``SURFNET_DISABLE_NUMBA=1`` to force the pure-numpy code paths (useful
for debugging and for the backend comparison benchmark).
"""

import os

_disabled = os.environ.get("SURFNET_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    from numba import njit as _njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or a no-op decorator when numba is absent."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if _njit is None:
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn
    return _njit(*args, **kwargs)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
