"""Optional numba acceleration.

Set ``PAAT_DISABLE_NUMBA=1`` before importing :mod:`paat` to force the
pure-numpy kernels. When numba is not installed the numpy kernels are used
regardless of the flag.
"""

import os

_DISABLED = os.environ.get("PAAT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by PAAT_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # bare @njit or @njit(...) both become identity decorators
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def deco(fn):
            return fn

        return deco


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
