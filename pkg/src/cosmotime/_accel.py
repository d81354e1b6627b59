"""Switch between numba-compiled kernels and their pure-numpy twins.

Set ``COSMOTIME_DISABLE_NUMBA=1`` before import to run every hot kernel through
the numpy path. The flag is read once, at import time.
"""

import os

DISABLE_NUMBA = os.environ.get("COSMOTIME_DISABLE_NUMBA", "0").strip().lower() in ("1", "true", "yes")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

HAVE_NUMBA = _numba is not None and not DISABLE_NUMBA


def njit(*args, **kwargs):
    """``numba.njit`` when available and enabled, identity otherwise."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return _numba.njit(*args, **kwargs)


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
