"""Optional numba acceleration.

Set ``FRACDP_DISABLE_NUMBA=1`` in the environment before import to force the
pure-numpy kernels (also used automatically when numba is not installed).
"""

from __future__ import annotations

import os

_DISABLED = os.environ.get("FRACDP_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by FRACDP_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # bare @njit or @njit(...)
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def _wrap(fn):
            return fn

        return _wrap


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
