"""Numba switch.

Set ``SPMQC_DISABLE_NUMBA=1`` to force the pure-numpy kernels. The flag is
read once at import time.
"""

import os

_FLAG = os.environ.get("SPMQC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _FLAG:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is active, else ``None``.

    Kernel modules pair each jitted loop with a numpy fallback and choose at
    import time, so a ``None`` here simply selects the fallback.
    """
    bare = len(args) == 1 and callable(args[0]) and not kwargs
    if not HAVE_NUMBA:
        return None if bare else (lambda fn: None)
    kwargs.setdefault("cache", True)
    return _njit(cache=True)(args[0]) if bare else _njit(*args, **kwargs)
